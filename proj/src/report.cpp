#include "fickkin/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "fickkin/errors.hpp"

namespace fickkin {

namespace {

void ensure_parent(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

std::string hex_hash(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json report_header(const std::string& verb, std::uint64_t config_hash) {
  Json j;
  j["tool"] = "fickkin";
  j["version"] = kToolVersion;
  j["verb"] = verb;
  j["config_hash"] = hex_hash(config_hash);
  return j;
}

Json to_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Json to_json(const Eigen::MatrixXd& m) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(to_json(Eigen::VectorXd(m.row(i).transpose())));
  return a;
}

void write_json(const std::string& path, const Json& j) {
  ensure_parent(path);
  std::ofstream os(path);
  if (!os) throw config_error("cannot write " + path);
  os << j.dump(2) << '\n';
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header) : path_(path), cols_(header.size()) {
  for (std::size_t k = 0; k < header.size(); ++k) buf_ += (k ? "," : "") + header[k];
  buf_ += '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != cols_) throw dimension_error("csv row has " + std::to_string(values.size()) + " columns");
  for (std::size_t k = 0; k < values.size(); ++k) buf_ += (k ? "," : "") + format_double(values[k]);
  buf_ += '\n';
}

void CsvWriter::close() {
  ensure_parent(path_);
  std::ofstream os(path_);
  if (!os) throw config_error("cannot write " + path_);
  os << buf_;
}

}  // namespace fickkin
