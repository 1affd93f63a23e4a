#include "wit/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace wit {

namespace {

std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

bool parse_double(const std::string& s, double& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  const char* b = t.data();
  const char* e = b + t.size();
  auto res = std::from_chars(b, e, out);
  return res.ec == std::errc() && res.ptr == e;
}

// Resolves a selector token to 0-based column indices.
std::vector<Index> resolve_token(const std::string& token,
                                 const std::vector<std::string>& headers) {
  const std::string t = trim(token);
  if (t.empty()) throw SchemaError("empty column selector");
  auto is_int = [](const std::string& s) {
    return !s.empty() &&
           s.find_first_not_of("0123456789") == std::string::npos;
  };
  const size_t dash = t.find('-');
  if (dash != std::string::npos && dash > 0 && is_int(t.substr(0, dash)) &&
      is_int(t.substr(dash + 1))) {
    const long a = std::stol(t.substr(0, dash));
    const long b = std::stol(t.substr(dash + 1));
    if (a < 1 || b < a || b > static_cast<long>(headers.size()))
      throw SchemaError("column range '" + t + "' out of bounds");
    std::vector<Index> out;
    for (long i = a; i <= b; ++i) out.push_back(static_cast<Index>(i - 1));
    return out;
  }
  if (is_int(t)) {
    const long i = std::stol(t);
    if (i < 1 || i > static_cast<long>(headers.size()))
      throw SchemaError("column index '" + t + "' out of bounds");
    return {static_cast<Index>(i - 1)};
  }
  for (size_t i = 0; i < headers.size(); ++i)
    if (headers[i] == t) return {static_cast<Index>(i)};
  throw SchemaError("column '" + t + "' not found in header");
}

std::vector<Index> resolve_tokens(const std::vector<std::string>& tokens,
                                  const std::vector<std::string>& headers) {
  std::vector<Index> out;
  for (const auto& tok : tokens) {
    auto ids = resolve_token(tok, headers);
    out.insert(out.end(), ids.begin(), ids.end());
  }
  return out;
}

}  // namespace

std::vector<std::string> parse_selector_list(const std::string& arg) {
  std::vector<std::string> out;
  std::stringstream ss(arg);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

IVDataset load_csv(const std::string& path, const ColumnSpec& spec) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty file: " + path);
  std::vector<std::string> headers;
  for (auto& h : split_record(line)) headers.push_back(trim(h));

  std::vector<std::vector<double>> rows;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_record(line);
    if (fields.size() != headers.size())
      throw ParseError("row " + std::to_string(lineno) + ": expected " +
                       std::to_string(headers.size()) + " fields, got " +
                       std::to_string(fields.size()));
    std::vector<double> vals(fields.size());
    for (size_t c = 0; c < fields.size(); ++c) {
      if (!parse_double(fields[c], vals[c]))
        throw ParseError("row " + std::to_string(lineno) + ", column '" +
                         headers[c] + "': non-numeric value '" +
                         trim(fields[c]) + "'");
    }
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw SchemaError("no data rows in " + path);

  if (spec.y.empty() || spec.d.empty())
    throw SchemaError("column spec must name the outcome and treatment");
  const Index yc = resolve_token(spec.y, headers).at(0);
  const Index dc = resolve_token(spec.d, headers).at(0);
  std::vector<Index> wc = resolve_tokens(spec.w, headers);
  std::vector<Index> zc;
  if (!spec.z.empty()) {
    zc = resolve_tokens(spec.z, headers);
  } else {
    std::vector<bool> used(headers.size(), false);
    used[static_cast<size_t>(yc)] = used[static_cast<size_t>(dc)] = true;
    for (Index c : wc) used[static_cast<size_t>(c)] = true;
    for (size_t c = 0; c < headers.size(); ++c)
      if (!used[c]) zc.push_back(static_cast<Index>(c));
  }
  if (zc.empty()) throw SchemaError("no instrument columns selected");

  const Index n = static_cast<Index>(rows.size());
  VectorXd y(n), d(n);
  MatrixXd z(n, static_cast<Index>(zc.size()));
  MatrixXd w(n, static_cast<Index>(wc.size()));
  for (Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<size_t>(i)];
    y[i] = r[static_cast<size_t>(yc)];
    d[i] = r[static_cast<size_t>(dc)];
    for (size_t k = 0; k < zc.size(); ++k)
      z(i, static_cast<Index>(k)) = r[static_cast<size_t>(zc[k])];
    for (size_t k = 0; k < wc.size(); ++k)
      w(i, static_cast<Index>(k)) = r[static_cast<size_t>(wc[k])];
  }

  std::optional<MatrixXd> wopt;
  if (w.cols() > 0) wopt = std::move(w);
  return make_dataset(std::move(y), std::move(d), std::move(z),
                      std::move(wopt));
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write file: " + path);
  for (size_t c = 0; c < header.size(); ++c)
    out << header[c] << (c + 1 == header.size() ? '\n' : ',');
  for (const auto& r : rows)
    for (size_t c = 0; c < r.size(); ++c)
      out << r[c] << (c + 1 == r.size() ? '\n' : ',');
}

}  // namespace wit
