#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <json.hpp>
#include <string>
#include <vector>

namespace fickkin {

inline constexpr const char* kToolVersion = "0.3.0";

using Json = nlohmann::ordered_json;

std::string hex_hash(std::uint64_t h);

/// Report skeleton with tool, version and config hash first.
Json report_header(const std::string& verb, std::uint64_t config_hash);

Json to_json(const Eigen::VectorXd& v);
Json to_json(const Eigen::MatrixXd& m);  // list of rows

void write_json(const std::string& path, const Json& j);

/// '.' decimal, ',' separator, header row, 17 significant digits.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void row(const std::vector<double>& values);
  void close();

 private:
  std::string path_;
  std::string buf_;
  std::size_t cols_;
};

}  // namespace fickkin
