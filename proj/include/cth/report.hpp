#ifndef CTH_REPORT_HPP
#define CTH_REPORT_HPP

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "cth/linalg.hpp"

namespace cth {

/// Insertion-ordered JSON value for machine-readable reports. The CLI
/// contract is byte-identical output for identical inputs, so numbers are
/// always printed with %.17g and object keys keep their insertion order
/// (the vendor JSON library re-sorts keys and picks shortest-roundtrip
/// float forms, neither of which this report format wants).
class Report {
public:
  Report() : node_(Null{}) {}

  static Report object();
  static Report array();
  static Report number(double v);
  static Report integer(long long v);
  static Report boolean(bool v);
  static Report string(std::string v);

  Report& set(const std::string& key, Report value); // object only
  Report& push(Report value);                        // array only

  // convenience
  Report& set(const std::string& key, double v) { return set(key, number(v)); }
  Report& set(const std::string& key, int v) { return set(key, integer(v)); }
  Report& set(const std::string& key, long long v) { return set(key, integer(v)); }
  Report& set(const std::string& key, std::size_t v) {
    return set(key, integer(static_cast<long long>(v)));
  }
  Report& set(const std::string& key, bool v) { return set(key, boolean(v)); }
  Report& set(const std::string& key, const char* v) { return set(key, string(v)); }
  Report& set(const std::string& key, const std::string& v) { return set(key, string(v)); }

  static Report vector(std::span<const double> values);
  static Report matrix(const SymMat& m);
  static Report matrix(const Mat& m);

  std::string dump() const; // compact, deterministic

  /// %.17g rendering shared with the CSV writer.
  static std::string format_double(double v);

private:
  struct Null {};
  using Object = std::vector<std::pair<std::string, Report>>;
  using Array = std::vector<Report>;
  std::variant<Null, bool, long long, double, std::string, Object, Array> node_;

  void dump_to(std::string& out) const;
};

/// Minimal CSV writer: header row plus one row per data point, numbers in
/// the same %.17g rendering as the JSON reports.
class CsvWriter {
public:
  explicit CsvWriter(std::vector<std::string> header);
  void row(std::span<const double> values);
  void row_mixed(std::span<const std::string> values);
  std::string str() const { return out_; }

private:
  std::size_t columns_;
  std::string out_;
};

} // namespace cth

#endif
