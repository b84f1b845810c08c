#pragma once

#include <ostream>
#include <string>

#include "cgrn/trainer.hpp"

namespace cgrn {

enum class MetricsFormat { KeyValue, Json };

std::string to_string(MetricsFormat f);
MetricsFormat parse_metrics_format(const std::string& s);

/// One line per step with fields in the fixed order step, epoch, L_pixel,
/// L_CR, L_D, composite, batch_acc, wallclock_ms. Terms of disabled branches
/// are omitted. Unless `wallclock` is set the time field is written as 0 so
/// that identical runs produce identical files.
class MetricsWriter {
 public:
  MetricsWriter(std::ostream& out, MetricsFormat format, bool wallclock = false);

  void write(const StepRecord& rec);
  std::string format_line(const StepRecord& rec) const;

 private:
  std::ostream& out_;
  MetricsFormat format_;
  bool wallclock_;
};

/// Shortest round-trip-safe rendering used by every emitted table.
std::string format_real(double v);

}  // namespace cgrn
