#include "gpred/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace gpred {

namespace {

[[noreturn]] void fail_at(const std::string& path, size_t line, size_t col,
                          const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " +
                           what);
}

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delim)) out.push_back(field);
  if (!line.empty() && line.back() == delim) out.push_back("");
  return out;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open for reading");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  return out;
}

}  // namespace

std::string format_real(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parse_real(const std::string& s) {
  if (s == "NA") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{} || res.ptr != end)
    throw std::runtime_error("'" + s + "' is not a number");
  return v;
}

Table::Table(std::string id_name, std::vector<std::string> value_names, Eigen::Index rows) {
  column_names.push_back(std::move(id_name));
  for (auto& n : value_names) column_names.push_back(std::move(n));
  ids.resize(static_cast<size_t>(rows));
  values.resize(rows, static_cast<Eigen::Index>(column_names.size()) - 1);
}

Table read_table(const std::string& path, char delim) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw std::runtime_error(path + ": empty file (header expected)");
  Table t;
  t.column_names = split(lines[0], delim);
  if (t.column_names.empty()) fail_at(path, 1, 1, "empty header");
  const size_t ncol = t.column_names.size();
  const size_t nrow = lines.size() - 1;
  t.ids.resize(nrow);
  t.values.resize(static_cast<Eigen::Index>(nrow), static_cast<Eigen::Index>(ncol) - 1);
  for (size_t r = 0; r < nrow; ++r) {
    const auto fields = split(lines[r + 1], delim);
    if (fields.size() != ncol)
      fail_at(path, r + 2, 1,
              "expected " + std::to_string(ncol) + " fields, found " +
                  std::to_string(fields.size()));
    t.ids[r] = fields[0];
    for (size_t cidx = 1; cidx < ncol; ++cidx) {
      try {
        t.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(cidx - 1)) =
            parse_real(fields[cidx]);
      } catch (const std::exception& e) {
        fail_at(path, r + 2, cidx + 1, e.what());
      }
    }
  }
  return t;
}

void write_table(const std::string& path, const Table& t, char delim) {
  if (t.values.rows() != static_cast<Eigen::Index>(t.ids.size()) ||
      t.values.cols() != static_cast<Eigen::Index>(t.column_names.size()) - 1)
    throw std::invalid_argument(path + ": table shape inconsistent");
  auto out = open_out(path);
  for (size_t c = 0; c < t.column_names.size(); ++c)
    out << (c ? std::string(1, delim) : "") << t.column_names[c];
  out << '\n';
  for (size_t r = 0; r < t.ids.size(); ++r) {
    out << t.ids[r];
    for (Eigen::Index c = 0; c < t.values.cols(); ++c)
      out << delim << format_real(t.values(static_cast<Eigen::Index>(r), c));
    out << '\n';
  }
}

GenotypeMatrix read_genotypes(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw std::runtime_error(path + ": empty file (header expected)");
  const auto header = split(lines[0], '\t');
  if (header.size() < 2) fail_at(path, 1, 1, "header needs an id column and >= 1 marker");
  GenotypeMatrix W;
  W.marker_ids.assign(header.begin() + 1, header.end());
  const size_t p = W.marker_ids.size();
  const size_t n = lines.size() - 1;
  if (n == 0) throw std::runtime_error(path + ": no individuals");
  W.codes.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  W.missing = BoolArray::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p), false);
  W.individual_ids.resize(n);
  for (size_t r = 0; r < n; ++r) {
    const auto fields = split(lines[r + 1], '\t');
    if (fields.size() != p + 1)
      fail_at(path, r + 2, 1,
              "expected " + std::to_string(p + 1) + " fields, found " +
                  std::to_string(fields.size()));
    W.individual_ids[r] = fields[0];
    for (size_t j = 0; j < p; ++j) {
      const std::string& f = fields[j + 1];
      const auto ri = static_cast<Eigen::Index>(r);
      const auto ji = static_cast<Eigen::Index>(j);
      if (f == "NA") {
        W.missing(ri, ji) = true;
        W.codes(ri, ji) = 0.0;
      } else if (f == "0" || f == "1" || f == "2") {
        W.codes(ri, ji) = static_cast<double>(f[0] - '0');
      } else {
        fail_at(path, r + 2, j + 2, "genotype must be 0, 1, 2 or NA; found '" + f + "'");
      }
    }
  }
  if (!W.has_missing()) W.missing.resize(0, 0);
  W.validate();
  return W;
}

void write_genotypes(const std::string& path, const GenotypeMatrix& W) {
  W.validate();
  auto out = open_out(path);
  out << "id";
  for (Eigen::Index j = 0; j < W.p(); ++j)
    out << '\t' << (W.marker_ids.empty() ? "m" + std::to_string(j + 1)
                                         : W.marker_ids[static_cast<size_t>(j)]);
  out << '\n';
  for (Eigen::Index i = 0; i < W.n(); ++i) {
    out << (W.individual_ids.empty() ? "ind" + std::to_string(i + 1)
                                     : W.individual_ids[static_cast<size_t>(i)]);
    for (Eigen::Index j = 0; j < W.p(); ++j) {
      if (W.missing.size() > 0 && W.missing(i, j))
        out << "\tNA";
      else
        out << '\t' << static_cast<int>(W.codes(i, j));
    }
    out << '\n';
  }
}

PhenotypeTable read_phenotypes(const std::string& path) {
  Table t = read_table(path);
  if (t.column_names.size() < 2)
    throw std::runtime_error(path + ": need an id column and a trait column");
  PhenotypeTable out;
  out.phenotypes.ids = t.ids;
  out.phenotypes.y = t.values.col(0);
  out.covariate_names.assign(t.column_names.begin() + 2, t.column_names.end());
  out.covariates = t.values.rightCols(t.values.cols() - 1);
  out.phenotypes.validate();
  if (!out.covariates.allFinite())
    throw std::runtime_error(path + ": covariates contain NA or non-finite values");
  return out;
}

void write_phenotypes(const std::string& path, const PhenotypeTable& t) {
  const Eigen::Index n = t.phenotypes.n();
  Table tab("id", {}, n);
  tab.column_names = {"id", "y"};
  for (auto& c : t.covariate_names) tab.column_names.push_back(c);
  tab.values.resize(n, 1 + t.covariates.cols());
  tab.values.col(0) = t.phenotypes.y;
  if (t.covariates.cols() > 0) tab.values.rightCols(t.covariates.cols()) = t.covariates;
  for (Eigen::Index i = 0; i < n; ++i)
    tab.ids[static_cast<size_t>(i)] = t.phenotypes.ids.empty()
                                          ? "ind" + std::to_string(i + 1)
                                          : t.phenotypes.ids[static_cast<size_t>(i)];
  write_table(path, tab);
}

Pedigree read_pedigree(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw std::runtime_error(path + ": empty file (header expected)");
  Pedigree ped;
  for (size_t r = 1; r < lines.size(); ++r) {
    const auto fields = split(lines[r], '\t');
    if (fields.size() != 3) fail_at(path, r + 1, 1, "expected 3 fields: id, sire, dam");
    ped.records.push_back({fields[0], fields[1], fields[2]});
  }
  return ped;
}

void write_pedigree(const std::string& path, const Pedigree& ped) {
  auto out = open_out(path);
  out << "id\tsire\tdam\n";
  for (const auto& rec : ped.records)
    out << rec.id << '\t' << (rec.sire.empty() ? "0" : rec.sire) << '\t'
        << (rec.dam.empty() ? "0" : rec.dam) << '\n';
}

void write_keyvalue(const std::string& path,
                    const std::vector<std::pair<std::string, std::string>>& kv) {
  auto out = open_out(path);
  for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
}

std::vector<std::pair<std::string, std::string>> read_keyvalue(const std::string& path) {
  std::vector<std::pair<std::string, std::string>> kv;
  for (const auto& line : read_lines(path)) {
    if (line.empty() || line[0] == '#' || line[0] == '[') continue;  // comment/section
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error(path + ": malformed line '" + line + "'");
    kv.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  return kv;
}

}  // namespace gpred
