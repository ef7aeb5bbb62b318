#include "vcmm/model_io.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "vcmm/errors.hpp"

namespace vcmm {
namespace {

using json = nlohmann::ordered_json;

json margin_json(const MarginModel& m) {
  return json{{"family", to_string(m.family)}, {"params", m.params}};
}

json edge_json(const VineEdge& e) {
  std::vector<int> cond;
  for (int c : e.conditioning) cond.push_back(c + 1);
  const PairCopula& c = e.copula;
  return json{{"conditioned", {e.a + 1, e.b + 1}},
              {"conditioning", cond},
              {"family", to_string(c.family())},
              {"rotation", static_cast<int>(c.rotation())},
              {"params", c.params()},
              {"tau", c.tau()}};
}

template <class T>
T get(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key))
    throw SchemaError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw SchemaError(where + ": field '" + key + "' has the wrong type");
  }
}

std::vector<int> zero_based(std::vector<int> v, int dim, const std::string& where) {
  for (int& x : v) {
    if (x < 1 || x > dim) throw SchemaError(where + ": variable index out of range");
    --x;
  }
  return v;
}

bool parse_double(std::string_view s, double& out) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string strip(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && s[b] == ' ') ++b;
  s = s.substr(b);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

}  // namespace

std::string serialize_model(const MixtureModel& model, const FitTrace& trace) {
  json comps = json::array();
  for (const auto& c : model.components) {
    json margins = json::array();
    for (const auto& m : c.margins) margins.push_back(margin_json(m));
    json trees = json::array();
    for (const auto& tree : c.vine.trees()) {
      json edges = json::array();
      for (const auto& e : tree) edges.push_back(edge_json(e));
      trees.push_back(std::move(edges));
    }
    comps.push_back(json{{"weight", c.weight},
                         {"margins", std::move(margins)},
                         {"vine", {{"truncation", c.vine.truncation()}, {"trees", std::move(trees)}}}});
  }
  json doc{{"format", "vcmm-model"},
           {"version", kModelFormatVersion},
           {"k", model.k()},
           {"dim", model.dim()},
           {"components", std::move(comps)},
           {"fit",
            {{"loglik", trace.loglik},
             {"iterations", trace.iterations},
             {"tol", trace.tol},
             {"converged", trace.converged},
             {"flagged", trace.flagged}}}};
  return doc.dump(2) + "\n";
}

ModelFile parse_model(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("model file is not valid JSON: ") + e.what());
  }
  if (get<std::string>(doc, "format", "model") != "vcmm-model")
    throw SchemaError("model: unexpected format tag");
  const int version = get<int>(doc, "version", "model");
  if (version != kModelFormatVersion)
    throw SchemaError("model: unsupported version " + std::to_string(version));
  const int k = get<int>(doc, "k", "model");
  const int dim = get<int>(doc, "dim", "model");
  const json comps = get<json>(doc, "components", "model");
  if (!comps.is_array() || static_cast<int>(comps.size()) != k || k < 1)
    throw SchemaError("model: component count does not match k");

  ModelFile out;
  for (int j = 0; j < k; ++j) {
    const std::string where = "component " + std::to_string(j + 1);
    const json& cj = comps[static_cast<std::size_t>(j)];
    Component c;
    c.weight = get<double>(cj, "weight", where);
    const json margins = get<json>(cj, "margins", where);
    if (!margins.is_array() || static_cast<int>(margins.size()) != dim)
      throw SchemaError(where + ": margin count does not match dim");
    try {
      for (const auto& mj : margins)
        c.margins.push_back(make_margin(margin_family_from_string(get<std::string>(mj, "family", where)),
                                        get<std::vector<double>>(mj, "params", where)));
      const json vj = get<json>(cj, "vine", where);
      const int trunc = get<int>(vj, "truncation", where);
      const json tj = get<json>(vj, "trees", where);
      if (!tj.is_array()) throw SchemaError(where + ": trees must be an array");
      std::vector<std::vector<VineEdge>> trees;
      for (const auto& tree : tj) {
        std::vector<VineEdge> edges;
        for (const auto& ej : tree) {
          const auto ab = zero_based(get<std::vector<int>>(ej, "conditioned", where), dim, where);
          if (ab.size() != 2) throw SchemaError(where + ": an edge needs two conditioned variables");
          VineEdge e;
          e.a = ab[0];
          e.b = ab[1];
          e.conditioning = zero_based(get<std::vector<int>>(ej, "conditioning", where), dim, where);
          e.copula = PairCopula(copula_family_from_string(get<std::string>(ej, "family", where)),
                                get<std::vector<double>>(ej, "params", where),
                                rotation_from_degrees(get<int>(ej, "rotation", where)));
          edges.push_back(std::move(e));
        }
        trees.push_back(std::move(edges));
      }
      c.vine = VineCopula(dim, std::move(trees), trunc);
    } catch (const SchemaError&) {
      throw;
    } catch (const Error& e) {
      throw SchemaError(where + ": " + e.what());
    }
    out.model.components.push_back(std::move(c));
  }
  try {
    validate(out.model);
  } catch (const Error& e) {
    throw SchemaError(std::string("model: ") + e.what());
  }
  if (doc.contains("fit")) {
    const json& f = doc["fit"];
    out.trace.loglik = get<std::vector<double>>(f, "loglik", "fit");
    out.trace.iterations = get<int>(f, "iterations", "fit");
    out.trace.tol = get<double>(f, "tol", "fit");
    out.trace.converged = get<bool>(f, "converged", "fit");
    out.trace.flagged = get<std::vector<int>>(f, "flagged", "fit");
  }
  return out;
}

Dataset read_csv(std::istream& is) {
  Dataset out;
  std::string line;
  if (!std::getline(is, line)) throw IngestionError("empty input: a header row is required");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  for (auto& name : split(line)) out.names.push_back(strip(name));
  const std::size_t d = out.names.size();
  if (d == 0 || (d == 1 && out.names[0].empty())) throw IngestionError("header row has no columns");
  out.x = Matrix(0, d);
  std::vector<double> row(d);
  std::size_t r = 0;
  while (std::getline(is, line)) {
    if (strip(line).empty()) continue;
    ++r;
    const auto cells = split(line);
    if (cells.size() != d)
      throw IngestionError("row " + std::to_string(r) + ": expected " + std::to_string(d) +
                           " cells, found " + std::to_string(cells.size()));
    for (std::size_t p = 0; p < d; ++p) {
      const std::string cell = strip(cells[p]);
      const std::string where = "row " + std::to_string(r) + ", column " + std::to_string(p + 1) +
                                " (" + out.names[p] + ")";
      if (cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan")
        throw IngestionError(where + ": missing value");
      if (!parse_double(cell, row[p]))
        throw IngestionError(where + ": non-numeric value '" + cell + "'");
    }
    out.x.append_row(row);
  }
  if (out.x.rows() == 0) throw IngestionError("no data rows");
  return out;
}

Partition extract_label_column(Dataset& data, const std::string& name) {
  std::size_t col = data.names.size();
  for (std::size_t p = 0; p < data.names.size(); ++p)
    if (data.names[p] == name) col = p;
  if (col == data.names.size()) throw IngestionError("label column '" + name + "' not found");
  Partition labels;
  Matrix rest(0, data.names.size() - 1);
  std::vector<double> row;
  for (std::size_t i = 0; i < data.x.rows(); ++i) {
    const double v = data.x(i, col);
    if (v != std::floor(v) || v < 1)
      throw IngestionError("row " + std::to_string(i + 1) + ": label must be a positive integer");
    labels.push_back(static_cast<int>(v) - 1);
    row.clear();
    for (std::size_t p = 0; p < data.names.size(); ++p)
      if (p != col) row.push_back(data.x(i, p));
    rest.append_row(row);
  }
  data.names.erase(data.names.begin() + static_cast<std::ptrdiff_t>(col));
  data.x = std::move(rest);
  return labels;
}

Partition read_partition(std::istream& is) {
  Partition out;
  std::string line;
  std::size_t r = 0;
  while (std::getline(is, line)) {
    ++r;
    const std::string cell = strip(line);
    if (cell.empty()) continue;
    int v = 0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size() || v < 1)
      throw IngestionError("partition line " + std::to_string(r) + ": expected a positive integer");
    out.push_back(v - 1);
  }
  if (out.empty()) throw IngestionError("partition file is empty");
  return out;
}

void write_partition(std::ostream& os, const Partition& labels) {
  for (int l : labels) os << l + 1 << '\n';
}

void write_csv(std::ostream& os, const std::vector<std::string>& names, const Matrix& x) {
  for (std::size_t p = 0; p < names.size(); ++p) os << (p ? "," : "") << names[p];
  os << '\n';
  char buf[64];
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t p = 0; p < x.cols(); ++p) {
      const auto res = std::to_chars(buf, buf + sizeof buf, x(i, p));
      os << (p ? "," : "") << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    os << '\n';
  }
}

void write_assignment(std::ostream& os, const Partition& labels, const Matrix& posterior) {
  os << "row,label";
  for (std::size_t j = 0; j < posterior.cols(); ++j) os << ",post_" << j + 1;
  os << '\n';
  char buf[64];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    os << i + 1 << ',' << labels[i] + 1;
    for (std::size_t j = 0; j < posterior.cols(); ++j) {
      const auto res = std::to_chars(buf, buf + sizeof buf, posterior(i, j));
      os << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    os << '\n';
  }
}

}  // namespace vcmm
