#include "eivgmm/data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

namespace eivgmm {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

double parse_number(const std::string& cell, std::size_t row, const std::string& column) {
  const std::string t = trim(cell);
  const char* begin = t.data();
  const char* end = t.data() + t.size();
  if (!t.empty() && *begin == '+') ++begin;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (t.empty() || ec != std::errc() || ptr != end) {
    throw Error(ErrorKind::parse, "malformed numeric cell '" + cell + "' at row " +
                                      std::to_string(row) + ", column '" + column + "'");
  }
  return value;
}

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::size_t find_column(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    throw Error(ErrorKind::validation, "column '" + name + "' not found in header");
  }
  return static_cast<std::size_t>(it - header.begin());
}

std::string regex_escape(const std::string& s) {
  static const std::regex special(R"([.^$|()\[\]{}*+?\\])");
  return std::regex_replace(s, special, R"(\$&)");
}

}  // namespace

std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  char c = 0;

  auto end_record = [&] {
    if (field_started || !record.empty()) {
      record.push_back(field);
      records.push_back(std::move(record));
    }
    record.clear();
    field.clear();
    field_started = false;
  };

  while (in.get(c)) {
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        record.push_back(field);
        field.clear();
        field_started = true;
        break;
      case '\r':
        if (in.peek() == '\n') in.get(c);
        end_record();
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw Error(ErrorKind::parse, "unterminated quoted field");
  end_record();
  return records;
}

Dataset load_csv(std::istream& in, const CsvSchema& schema) {
  if (schema.y.empty()) throw Error(ErrorKind::validation, "schema names no outcome column");
  const auto records = parse_csv(in);
  if (records.empty()) throw Error(ErrorKind::validation, "empty CSV");

  std::vector<std::string> header;
  for (const auto& h : records.front()) header.push_back(trim(h));

  const std::size_t y_col = find_column(header, schema.y);
  std::vector<std::size_t> z_cols;
  for (const auto& name : schema.z) z_cols.push_back(find_column(header, name));

  // Replicate columns: covariate k -> (replicate r -> column index).
  const std::regex rep_re("^" + regex_escape(schema.w_prefix) + R"(([0-9]+)_r([0-9]+)$)");
  std::map<int, std::map<int, std::size_t>> rep_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    std::smatch m;
    if (std::regex_match(header[c], m, rep_re)) {
      rep_cols[std::stoi(m[1].str())][std::stoi(m[2].str())] = c;
    }
  }
  if (rep_cols.empty()) {
    throw Error(ErrorKind::validation,
                "no replicate columns matching '" + schema.w_prefix + "<k>_r<r>'");
  }
  const int p = rep_cols.rbegin()->first;
  if (schema.p > 0 && schema.p != p) {
    throw Error(ErrorKind::validation, "schema expects p=" + std::to_string(schema.p) +
                                           " but header has p=" + std::to_string(p));
  }
  std::vector<int> rep_ids;
  for (const auto& [r, col] : rep_cols.begin()->second) rep_ids.push_back(r);
  for (int k = 1; k <= p; ++k) {
    const auto it = rep_cols.find(k);
    if (it == rep_cols.end()) {
      throw Error(ErrorKind::validation, "missing replicate columns for covariate " +
                                             schema.w_prefix + std::to_string(k));
    }
    std::vector<int> ids;
    for (const auto& [r, col] : it->second) ids.push_back(r);
    if (ids != rep_ids) {
      throw Error(ErrorKind::validation, "covariates disagree on replicate columns");
    }
  }

  const std::size_t n = records.size() - 1;
  VectorXd y(static_cast<Index>(n));
  MatrixXd zf(static_cast<Index>(n), static_cast<Index>(z_cols.size()));
  std::vector<MatrixXd> w_reps;
  w_reps.reserve(n);
  std::vector<std::size_t> short_rows;

  for (std::size_t i = 0; i < n; ++i) {
    const auto& rec = records[i + 1];
    const std::size_t row = i + 1;
    if (rec.size() != header.size()) {
      throw Error(ErrorKind::parse, "row " + std::to_string(row) + " has " +
                                        std::to_string(rec.size()) + " fields, header has " +
                                        std::to_string(header.size()));
    }
    const auto ii = static_cast<Index>(i);
    y(ii) = parse_number(rec[y_col], row, header[y_col]);
    for (std::size_t c = 0; c < z_cols.size(); ++c) {
      zf(ii, static_cast<Index>(c)) = parse_number(rec[z_cols[c]], row, header[z_cols[c]]);
    }

    std::vector<Eigen::RowVectorXd> complete;
    for (int r : rep_ids) {
      Eigen::RowVectorXd w(p);
      bool full = true;
      for (int k = 1; k <= p; ++k) {
        const std::size_t col = rep_cols[k][r];
        if (trim(rec[col]).empty()) {
          full = false;
          continue;
        }
        w(k - 1) = parse_number(rec[col], row, header[col]);
      }
      if (full) complete.push_back(w);
    }
    if (complete.size() < 2) short_rows.push_back(row);
    MatrixXd w(static_cast<Index>(complete.size()), p);
    for (std::size_t r = 0; r < complete.size(); ++r) w.row(static_cast<Index>(r)) = complete[r];
    w_reps.push_back(std::move(w));
  }

  if (!short_rows.empty()) {
    std::ostringstream msg;
    msg << "n_j<2 (fewer than 2 complete replicates) in " << short_rows.size() << " row(s):";
    for (std::size_t i = 0; i < short_rows.size() && i < 20; ++i) msg << ' ' << short_rows[i];
    if (short_rows.size() > 20) msg << " ...";
    throw Error(ErrorKind::validation, msg.str());
  }
  return Dataset(std::move(y), zf, std::move(w_reps));
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::validation, "cannot open '" + path.string() + "'");
  return load_csv(in, schema);
}

void write_csv(std::ostream& out, const Dataset& d, const CsvSchema& schema) {
  if (static_cast<Index>(schema.z.size()) != d.q()) {
    throw Error(ErrorKind::validation, "schema z columns do not match dataset q");
  }
  Index max_rep = 0;
  for (Index j = 0; j < d.n(); ++j) max_rep = std::max(max_rep, d.n_rep(j));

  out << schema.y;
  for (const auto& name : schema.z) out << ',' << name;
  for (Index r = 1; r <= max_rep; ++r) {
    for (Index k = 1; k <= d.p(); ++k) out << ',' << schema.w_prefix << k << "_r" << r;
  }
  out << '\n';
  for (Index j = 0; j < d.n(); ++j) {
    out << format_number(d.y()(j));
    for (Index c = 1; c <= d.q(); ++c) out << ',' << format_number(d.z()(j, c));
    const MatrixXd& w = d.replicates(j);
    for (Index r = 0; r < max_rep; ++r) {
      for (Index k = 0; k < d.p(); ++k) {
        out << ',';
        if (r < w.rows()) out << format_number(w(r, k));
      }
    }
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const Dataset& d, const CsvSchema& schema) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::validation, "cannot write '" + path.string() + "'");
  write_csv(out, d, schema);
}

}  // namespace eivgmm
