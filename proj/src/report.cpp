#include "cth/report.hpp"

#include <cmath>
#include <cstdio>

#include "cth/errors.hpp"

namespace cth {

Report Report::object() {
  Report r;
  r.node_ = Object{};
  return r;
}
Report Report::array() {
  Report r;
  r.node_ = Array{};
  return r;
}
Report Report::number(double v) {
  Report r;
  r.node_ = v;
  return r;
}
Report Report::integer(long long v) {
  Report r;
  r.node_ = v;
  return r;
}
Report Report::boolean(bool v) {
  Report r;
  r.node_ = v;
  return r;
}
Report Report::string(std::string v) {
  Report r;
  r.node_ = std::move(v);
  return r;
}

Report& Report::set(const std::string& key, Report value) {
  auto* obj = std::get_if<Object>(&node_);
  if (!obj) throw InvalidArgument("report: set() on a non-object node");
  obj->emplace_back(key, std::move(value));
  return *this;
}

Report& Report::push(Report value) {
  auto* arr = std::get_if<Array>(&node_);
  if (!arr) throw InvalidArgument("report: push() on a non-array node");
  arr->push_back(std::move(value));
  return *this;
}

Report Report::vector(std::span<const double> values) {
  Report r = array();
  for (double v : values) r.push(number(v));
  return r;
}

Report Report::matrix(const SymMat& m) {
  Report rows = array();
  for (int i = 0; i < m.dim(); ++i) {
    Report row = array();
    for (int j = 0; j < m.dim(); ++j) row.push(number(m(i, j)));
    rows.push(std::move(row));
  }
  return rows;
}

Report Report::matrix(const Mat& m) {
  Report rows = array();
  for (int i = 0; i < m.rows(); ++i) {
    Report row = array();
    for (int j = 0; j < m.cols(); ++j) row.push(number(m(i, j)));
    rows.push(std::move(row));
  }
  return rows;
}

std::string Report::format_double(double v) {
  if (std::isnan(v)) return "null";
  if (std::isinf(v)) return v > 0 ? "1e999" : "-1e999";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

void append_escaped(std::string& out, const std::string& s) {
  out += '"';
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  out += '"';
}

} // namespace

void Report::dump_to(std::string& out) const {
  if (std::holds_alternative<Null>(node_)) {
    out += "null";
  } else if (const bool* b = std::get_if<bool>(&node_)) {
    out += *b ? "true" : "false";
  } else if (const long long* i = std::get_if<long long>(&node_)) {
    out += std::to_string(*i);
  } else if (const double* d = std::get_if<double>(&node_)) {
    out += format_double(*d);
  } else if (const std::string* s = std::get_if<std::string>(&node_)) {
    append_escaped(out, *s);
  } else if (const Object* obj = std::get_if<Object>(&node_)) {
    out += '{';
    bool first = true;
    for (const auto& [k, v] : *obj) {
      if (!first) out += ',';
      first = false;
      append_escaped(out, k);
      out += ':';
      v.dump_to(out);
    }
    out += '}';
  } else if (const Array* arr = std::get_if<Array>(&node_)) {
    out += '[';
    bool first = true;
    for (const auto& v : *arr) {
      if (!first) out += ',';
      first = false;
      v.dump_to(out);
    }
    out += ']';
  }
}

std::string Report::dump() const {
  std::string out;
  dump_to(out);
  return out;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out_ += ',';
    out_ += header[i];
  }
  out_ += '\n';
}

void CsvWriter::row(std::span<const double> values) {
  if (values.size() != columns_) throw InvalidArgument("csv: column count mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out_ += ',';
    out_ += Report::format_double(values[i]);
  }
  out_ += '\n';
}

void CsvWriter::row_mixed(std::span<const std::string> values) {
  if (values.size() != columns_) throw InvalidArgument("csv: column count mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out_ += ',';
    out_ += values[i];
  }
  out_ += '\n';
}

} // namespace cth
