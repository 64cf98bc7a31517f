#include "npmle/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

namespace npmle {

namespace {

using nlohmann::json;

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // Trim surrounding blanks so "1, 2" parses.
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  require_config(out.good(), "cannot open '" + path + "' for writing");
  return out;
}

json mixture_to_json(const MixingMeasure& g) {
  json atoms = json::array();
  json weights = json::array();
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    if (g.weights()(j) == 0.0) continue;  // pruned atoms stay out of the wire format
    json a = json::array();
    for (int k = 0; k < g.dim(); ++k) a.push_back(g.atoms()(k, j));
    atoms.push_back(std::move(a));
    weights.push_back(g.weights()(j));
  }
  return json{{"dim", g.dim()}, {"atoms", std::move(atoms)}, {"weights", std::move(weights)}};
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Eigen::MatrixXd read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  require_config(in.good(), "cannot open '" + path + "'");

  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t expected_cols = 0;
  bool first_content_row = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_fields(line);

    std::vector<double> row;
    row.reserve(fields.size());
    bool numeric = true;
    std::size_t bad_col = 0;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const auto v = parse_double(fields[c]);
      if (!v) {
        numeric = false;
        bad_col = c + 1;
        break;
      }
      row.push_back(*v);
    }

    if (!numeric) {
      if (first_content_row) {
        first_content_row = false;  // header row
        expected_cols = fields.size();
        continue;
      }
      throw ConfigError("'" + path + "': non-numeric value at row " +
                        std::to_string(line_no) + ", column " + std::to_string(bad_col));
    }
    if (first_content_row) {
      first_content_row = false;
      expected_cols = fields.size();
    } else if (fields.size() != expected_cols) {
      throw ConfigError("'" + path + "': row " + std::to_string(line_no) + " has " +
                        std::to_string(fields.size()) + " fields, expected " +
                        std::to_string(expected_cols));
    }
    rows.push_back(std::move(row));
  }
  require_config(!rows.empty(), "'" + path + "': no data rows");

  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

Dataset read_dataset_csv(const std::string& path) {
  return Dataset::from_rows(read_csv_matrix(path));
}

void write_fit_json(const std::string& path, const FitResult& fit) {
  json doc = mixture_to_json(fit.mixture);
  doc["duality_gap"] = fit.duality_gap;
  doc["iterations"] = fit.iterations;
  doc["loglik"] = fit.loglik_trace.empty() ? 0.0 : fit.loglik_trace.back();
  auto out = open_out(path);
  out << doc.dump(2) << '\n';
}

LoadedModel read_fit_json(const std::string& path) {
  std::ifstream in(path);
  require_config(in.good(), "cannot open '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("'" + path + "': invalid JSON: " + e.what());
  }
  try {
    const int dim = doc.at("dim").get<int>();
    const auto& atoms = doc.at("atoms");
    const auto& weights = doc.at("weights");
    require_config(atoms.is_array() && weights.is_array() && atoms.size() == weights.size() &&
                       !atoms.empty(),
                   "'" + path + "': atoms and weights must be matching nonempty arrays");
    Eigen::MatrixXd a(dim, static_cast<Eigen::Index>(atoms.size()));
    Eigen::VectorXd w(static_cast<Eigen::Index>(weights.size()));
    for (std::size_t j = 0; j < atoms.size(); ++j) {
      require_config(atoms[j].is_array() && atoms[j].size() == static_cast<std::size_t>(dim),
                     "'" + path + "': atom " + std::to_string(j) + " has wrong dimension");
      for (int k = 0; k < dim; ++k) {
        a(k, static_cast<Eigen::Index>(j)) = atoms[j][static_cast<std::size_t>(k)].get<double>();
      }
      w(static_cast<Eigen::Index>(j)) = weights[j].get<double>();
    }
    LoadedModel model{MixingMeasure(std::move(a), std::move(w)),
                      doc.value("duality_gap", 0.0), doc.value("iterations", Eigen::Index(0)),
                      doc.value("loglik", 0.0)};
    return model;
  } catch (const json::exception& e) {
    throw ConfigError("'" + path + "': malformed model: " + e.what());
  }
}

void write_denoise_csv(const std::string& path, const Dataset& data,
                       const DenoiseResult& result) {
  require(result.estimates.cols() == data.size() && result.estimates.rows() == data.dim(),
          "write_denoise_csv: estimates must align with the data");
  auto out = open_out(path);
  const int d = data.dim();
  for (int k = 1; k <= d; ++k) out << "x_" << k << ",";
  for (int k = 1; k <= d; ++k) {
    out << "thetahat_" << k << (k < d || result.oracle ? "," : "");
  }
  if (result.oracle) {
    for (int k = 1; k <= d; ++k) out << "oracle_" << k << (k < d ? "," : "");
  }
  out << "\n";
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    for (int k = 0; k < d; ++k) out << format_double(data.points()(k, i)) << ",";
    for (int k = 0; k < d; ++k) {
      out << format_double(result.estimates(k, i)) << (k + 1 < d || result.oracle ? "," : "");
    }
    if (result.oracle) {
      for (int k = 0; k < d; ++k) {
        out << format_double((*result.oracle)(k, i)) << (k + 1 < d ? "," : "");
      }
    }
    out << "\n";
  }
}

void write_risk_json(const std::string& path, const DenoiseResult& result) {
  json doc;
  doc["n"] = result.estimates.cols();
  doc["dim"] = result.estimates.rows();
  doc["rho_used"] = result.rho_used;
  if (result.risk_vs_oracle) doc["risk_vs_oracle"] = *result.risk_vs_oracle;
  if (result.risk_vs_truth) doc["risk_vs_truth"] = *result.risk_vs_truth;
  auto out = open_out(path);
  out << doc.dump(2) << '\n';
}

void write_experiment_csv(const std::string& path, const ExperimentReport& report) {
  auto out = open_out(path);
  out << "scenario,n,replicate,metric,value\n";
  const std::string name = to_string(report.scenario);
  for (const auto& row : report.rows) {
    out << name << "," << row.n << "," << row.replicate << "," << row.metric << ","
        << format_double(row.value) << "\n";
  }
}

void write_experiment_json(const std::string& path, const ExperimentReport& report) {
  json cells = json::array();
  for (const auto& [n, metrics] : report.aggregated) {
    json entry;
    entry["n"] = n;
    json m;
    for (const auto& [metric, cell] : metrics) {
      m[metric] = json{{"mean", cell.mean},
                       {"std_error", cell.std_error},
                       {"replicates", cell.count}};
    }
    entry["metrics"] = std::move(m);
    cells.push_back(std::move(entry));
  }
  json doc{{"scenario", to_string(report.scenario)},
           {"seed", report.seed},
           {"n_replicates", report.n_replicates},
           {"cells", std::move(cells)}};
  auto out = open_out(path);
  out << doc.dump(2) << '\n';
}

}  // namespace npmle
