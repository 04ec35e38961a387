#include "driftrt/csv.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "driftrt/errors.hpp"

namespace driftrt {

namespace {

std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream stream(line);
  while (std::getline(stream, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& field, std::size_t line_no, const std::string& column) {
  const char* begin = field.c_str();
  char* end = nullptr;
  const double value = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw DataError("line " + std::to_string(line_no) + ": cannot parse " + column + " value '" +
                    field + "'");
  return value;
}

long parse_index(const std::string& field, std::size_t line_no, const std::string& column) {
  const char* begin = field.c_str();
  char* end = nullptr;
  const long value = std::strtol(begin, &end, 10);
  if (end == begin || *end != '\0')
    throw DataError("line " + std::to_string(line_no) + ": cannot parse " + column + " value '" +
                    field + "'");
  return value;
}

}  // namespace

void write_dataset_csv(const Dataset& dataset, const std::string& path, bool censor_noncrossed) {
  const ModelSpec& spec = dataset.spec;
  const int width1 = spec.p > 0 ? *std::max_element(spec.d1.begin(), spec.d1.end()) : 0;
  const int width2 = spec.p > 0 ? *std::max_element(spec.d2.begin(), spec.d2.end()) : 0;

  std::ofstream out(path, std::ios::binary);  // binary: identical bytes on every platform
  if (!out) throw DataError("cannot open '" + path + "' for writing");

  out << "subject,time_index,outcome,y,r_star,crossed";
  for (int c = 0; c < width1; ++c) out << ",v1_" << c;
  for (int c = 0; c < width2; ++c) out << ",v2_" << c;
  out << "\n";

  for (int k = 0; k < spec.m; ++k) {
    const SubjectData& subject = dataset.subjects[k];
    for (int i = 0; i < spec.n; ++i) {
      for (int j = 0; j < spec.p; ++j) {
        out << (k + 1) << ',' << (i + 1) << ',' << (j + 1) << ',';
        out << format_double(subject.y(i, j)) << ',';
        if (!censor_noncrossed || subject.crossed(i, j))
          out << format_double(subject.r_star(i, j));
        out << ',' << (subject.crossed(i, j) ? 1 : 0);
        for (int c = 0; c < width1; ++c) {
          out << ',';
          if (c < spec.d1[j]) out << format_double(subject.covariates.v1[j][c]);
        }
        for (int c = 0; c < width2; ++c) {
          out << ',';
          if (c < spec.d2[j]) out << format_double(subject.covariates.v2[j][c]);
        }
        out << "\n";
      }
    }
  }
  if (!out) throw DataError("write failed for '" + path + "'");
}

Dataset read_dataset_csv(const std::string& path, const ModelSpec& spec,
                         const Eigen::VectorXi& u1_index, const Eigen::VectorXi& u2_index) {
  validate_spec(spec);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");

  const int width1 = spec.p > 0 ? *std::max_element(spec.d1.begin(), spec.d1.end()) : 0;
  const int width2 = spec.p > 0 ? *std::max_element(spec.d2.begin(), spec.d2.end()) : 0;
  const std::size_t n_columns = 6 + static_cast<std::size_t>(width1) + width2;

  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw DataError("'" + path + "': missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  {
    std::string expected = "subject,time_index,outcome,y,r_star,crossed";
    for (int c = 0; c < width1; ++c) expected += ",v1_" + std::to_string(c);
    for (int c = 0; c < width2; ++c) expected += ",v2_" + std::to_string(c);
    if (line != expected)
      throw DataError("line 1: header does not match the configured model (expected '" +
                      expected + "')");
  }

  Dataset dataset;
  dataset.spec = spec;
  dataset.subjects.resize(spec.m);
  for (SubjectData& subject : dataset.subjects) {
    subject.y.resize(spec.n, spec.p);
    subject.r_star.resize(spec.n, spec.p);
    subject.crossed.resize(spec.n, spec.p);
    subject.covariates.u1_index = u1_index;
    subject.covariates.u2_index = u2_index;
    subject.covariates.v1.resize(spec.p);
    subject.covariates.v2.resize(spec.p);
    for (int j = 0; j < spec.p; ++j) {
      subject.covariates.v1[j].resize(spec.d1[j]);
      subject.covariates.v2[j].resize(spec.d2[j]);
    }
  }

  long expected_k = 1, expected_i = 1, expected_j = 1;
  std::size_t rows = 0;
  const std::size_t expected_rows =
      static_cast<std::size_t>(spec.m) * spec.n * spec.p;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_line(line);
    if (fields.size() != n_columns)
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(n_columns) + " columns, found " +
                      std::to_string(fields.size()));
    if (rows >= expected_rows)
      throw DataError("line " + std::to_string(line_no) + ": more rows than m*n*p = " +
                      std::to_string(expected_rows));

    const long k = parse_index(fields[0], line_no, "subject");
    const long i = parse_index(fields[1], line_no, "time_index");
    const long j = parse_index(fields[2], line_no, "outcome");
    if (k != expected_k || i != expected_i || j != expected_j)
      throw DataError("line " + std::to_string(line_no) + ": expected cell (" +
                      std::to_string(expected_k) + "," + std::to_string(expected_i) + "," +
                      std::to_string(expected_j) + "), found (" + std::to_string(k) + "," +
                      std::to_string(i) + "," + std::to_string(j) + ")");

    SubjectData& subject = dataset.subjects[static_cast<std::size_t>(k - 1)];
    const int jj = static_cast<int>(j - 1);
    const int ii = static_cast<int>(i - 1);
    subject.y(ii, jj) = parse_double(fields[3], line_no, "y");
    if (fields[4].empty())
      throw DataError("line " + std::to_string(line_no) +
                      ": empty r_star (censored files are not supported by the likelihood)");
    subject.r_star(ii, jj) = parse_double(fields[4], line_no, "r_star");
    const long crossed = parse_index(fields[5], line_no, "crossed");
    if (crossed != 0 && crossed != 1)
      throw DataError("line " + std::to_string(line_no) + ": crossed must be 0 or 1");
    subject.crossed(ii, jj) = crossed == 1;

    for (int c = 0; c < width1; ++c) {
      const std::string& field = fields[6 + static_cast<std::size_t>(c)];
      if (c < spec.d1[jj]) {
        const double value = parse_double(field, line_no, "v1_" + std::to_string(c));
        if (ii == 0) {
          subject.covariates.v1[jj][c] = value;
        } else if (subject.covariates.v1[jj][c] != value) {
          throw DataError("line " + std::to_string(line_no) +
                          ": v1_" + std::to_string(c) + " varies within subject/outcome");
        }
      } else if (!field.empty()) {
        throw DataError("line " + std::to_string(line_no) + ": unexpected value in v1_" +
                        std::to_string(c) + " for outcome " + std::to_string(j));
      }
    }
    for (int c = 0; c < width2; ++c) {
      const std::string& field = fields[6 + width1 + static_cast<std::size_t>(c)];
      if (c < spec.d2[jj]) {
        const double value = parse_double(field, line_no, "v2_" + std::to_string(c));
        if (ii == 0) {
          subject.covariates.v2[jj][c] = value;
        } else if (subject.covariates.v2[jj][c] != value) {
          throw DataError("line " + std::to_string(line_no) +
                          ": v2_" + std::to_string(c) + " varies within subject/outcome");
        }
      } else if (!field.empty()) {
        throw DataError("line " + std::to_string(line_no) + ": unexpected value in v2_" +
                        std::to_string(c) + " for outcome " + std::to_string(j));
      }
    }

    ++rows;
    if (++expected_j > spec.p) {
      expected_j = 1;
      if (++expected_i > spec.n) {
        expected_i = 1;
        ++expected_k;
      }
    }
  }
  if (rows != expected_rows)
    throw DataError("'" + path + "': found " + std::to_string(rows) + " data rows, expected " +
                    std::to_string(expected_rows));
  return dataset;
}

}  // namespace driftrt
