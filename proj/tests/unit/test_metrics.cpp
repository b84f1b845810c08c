#include <gtest/gtest.h>

#include <cstdlib>
#include <iostream>
#include <sstream>

#include "cgrn/metrics.hpp"

using namespace cgrn;

namespace {

StepRecord full_record() {
  StepRecord r;
  r.step = 12;
  r.epoch = 1;
  r.report.l_cr = 0.5;
  r.report.l_pixel = 0.25;
  r.report.l_d = 1.25;
  r.report.lambda = 100;
  r.report.composite = 100 * 0.5 + 100 * 0.25 - 1.25;
  r.report.batch_acc = 0.75;
  r.wallclock_ms = 1234.5;
  return r;
}

}  // namespace

TEST(Metrics, KeyValueFieldOrder) {
  const MetricsWriter w(std::cout, MetricsFormat::KeyValue);
  EXPECT_EQ(w.format_line(full_record()),
            "step=12 epoch=1 L_pixel=0.25 L_CR=0.5 L_D=1.25 composite=73.75 batch_acc=0.75 wallclock_ms=0");
}

TEST(Metrics, DisabledTermsAreOmitted) {
  StepRecord r = full_record();
  r.report.l_pixel.reset();
  r.report.l_d.reset();
  r.report.composite = 50;
  const MetricsWriter w(std::cout, MetricsFormat::KeyValue);
  EXPECT_EQ(w.format_line(r), "step=12 epoch=1 L_CR=0.5 composite=50 batch_acc=0.75 wallclock_ms=0");
}

TEST(Metrics, WallclockOnlyWhenRequested) {
  const MetricsWriter w(std::cout, MetricsFormat::KeyValue, true);
  EXPECT_NE(w.format_line(full_record()).find("wallclock_ms=1234.5"), std::string::npos);
}

TEST(Metrics, JsonLines) {
  std::ostringstream os;
  MetricsWriter w(os, MetricsFormat::Json);
  w.write(full_record());
  w.write(full_record());
  const std::string line =
      R"({"step":12,"epoch":1,"L_pixel":0.25,"L_CR":0.5,"L_D":1.25,"composite":73.75,"batch_acc":0.75,"wallclock_ms":0})";
  EXPECT_EQ(os.str(), line + "\n" + line + "\n");
}

TEST(Metrics, FormatNames) {
  EXPECT_EQ(parse_metrics_format("kv"), MetricsFormat::KeyValue);
  EXPECT_EQ(parse_metrics_format(to_string(MetricsFormat::Json)), MetricsFormat::Json);
  EXPECT_THROW(parse_metrics_format("csv"), std::invalid_argument);
}

TEST(Metrics, RealsRoundTrip) {
  for (double v : {0.1, 1.0 / 3, 2.0 / 3e-300, -7.25, 123456789.123456789, 5e-324}) {
    EXPECT_EQ(std::strtod(format_real(v).c_str(), nullptr), v);
  }
  EXPECT_EQ(format_real(0.5), "0.5");
}
