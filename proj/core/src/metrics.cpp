#include "cgrn/metrics.hpp"

#include <cstdio>
#include <stdexcept>
#include <utility>
#include <vector>

namespace cgrn {

std::string to_string(MetricsFormat f) { return f == MetricsFormat::KeyValue ? "kv" : "json"; }

MetricsFormat parse_metrics_format(const std::string& s) {
  if (s == "kv") return MetricsFormat::KeyValue;
  if (s == "json") return MetricsFormat::Json;
  throw std::invalid_argument("unknown metrics format '" + s + "' (kv|json)");
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

MetricsWriter::MetricsWriter(std::ostream& out, MetricsFormat format, bool wallclock)
    : out_(out), format_(format), wallclock_(wallclock) {}

std::string MetricsWriter::format_line(const StepRecord& rec) const {
  std::vector<std::pair<std::string, std::string>> fields;
  fields.emplace_back("step", std::to_string(rec.step));
  fields.emplace_back("epoch", std::to_string(rec.epoch));
  if (rec.report.l_pixel) fields.emplace_back("L_pixel", format_real(*rec.report.l_pixel));
  fields.emplace_back("L_CR", format_real(rec.report.l_cr));
  if (rec.report.l_d) fields.emplace_back("L_D", format_real(*rec.report.l_d));
  fields.emplace_back("composite", format_real(rec.report.composite));
  fields.emplace_back("batch_acc", format_real(rec.report.batch_acc));
  fields.emplace_back("wallclock_ms", wallclock_ ? format_real(rec.wallclock_ms) : "0");

  std::string line;
  if (format_ == MetricsFormat::KeyValue) {
    for (std::size_t i = 0; i < fields.size(); ++i) line += (i ? " " : "") + fields[i].first + "=" + fields[i].second;
  } else {
    line = "{";
    for (std::size_t i = 0; i < fields.size(); ++i) {
      line += (i ? "," : "") + ("\"" + fields[i].first + "\":") + fields[i].second;
    }
    line += "}";
  }
  return line;
}

void MetricsWriter::write(const StepRecord& rec) {
  out_ << format_line(rec) << '\n';
  out_.flush();
}

}  // namespace cgrn
