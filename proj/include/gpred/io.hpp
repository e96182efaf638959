#pragma once

// Delimited text I/O. All files are header-first with an id column, values
// are serialized with enough digits to round-trip exactly, and nothing
// written depends on locale, time, or environment — rerunning a command
// must reproduce files byte for byte.

#include "gpred/types.hpp"

#include <string>
#include <utility>
#include <vector>

namespace gpred {

// Locale-independent decimal form with 17 significant digits; parse_real
// recovers the exact double. NaN round-trips through "NA".
std::string format_real(double v);
double parse_real(const std::string& s);

// Rectangular file: header row, id first, numeric columns after ("NA" = NaN).
struct Table {
  std::vector<std::string> column_names;  // includes the id column at [0]
  std::vector<std::string> ids;
  Matrix values;  // ids.size() x (column_names.size() - 1)

  Table() = default;
  Table(std::string id_name, std::vector<std::string> value_names, Eigen::Index rows);
};

Table read_table(const std::string& path, char delim = '\t');
void write_table(const std::string& path, const Table& t, char delim = '\t');

// Genotypes: id column, one marker per column, entries 0/1/2 or NA.
GenotypeMatrix read_genotypes(const std::string& path);
void write_genotypes(const std::string& path, const GenotypeMatrix& W);

// Phenotypes: id, trait value, then any fixed-effect covariate columns.
struct PhenotypeTable {
  PhenotypeVector phenotypes;
  Matrix covariates;  // n x k, possibly k = 0
  std::vector<std::string> covariate_names;
};

PhenotypeTable read_phenotypes(const std::string& path);
void write_phenotypes(const std::string& path, const PhenotypeTable& t);

// Pedigree: id, sire, dam; "0" = unknown parent.
Pedigree read_pedigree(const std::string& path);
void write_pedigree(const std::string& path, const Pedigree& ped);

// key=value metadata, one pair per line, keys written in the given order.
void write_keyvalue(const std::string& path,
                    const std::vector<std::pair<std::string, std::string>>& kv);
std::vector<std::pair<std::string, std::string>> read_keyvalue(const std::string& path);

}  // namespace gpred
