#include <charconv>
#include <cmath>
#include <sstream>

#include "localprop/diagnostics.hpp"
#include "localprop/errors.hpp"

namespace localprop {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

void MetricsRecord::check() const {
  auto rate = [](const std::optional<double>& r, const char* what) {
    if (r && !(*r >= 0.0 && *r <= 100.0)) throw ConfigError(std::string(what) + " outside [0, 100]");
  };
  rate(train_error, "train error");
  rate(validation_error, "validation error");
  rate(test_error, "test error");
  if (angle && !(*angle >= 0.0 && *angle <= 180.0)) throw ConfigError("angle outside [0, 180]");
}

std::string metrics_header() {
  return "run,phase,epoch,batch,algorithm,train_error,validation_error,test_error,output_loss,"
         "total_discrepancy,layer_losses,angle,angle_ema,matmul_count";
}

std::string to_csv_row(const MetricsRecord& r) {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  std::ostringstream s;
  s << r.run << ',' << r.phase << ',' << r.epoch << ',' << (r.batch ? std::to_string(*r.batch) : "") << ','
    << to_string(r.algorithm) << ',' << opt(r.train_error) << ',' << opt(r.validation_error) << ','
    << opt(r.test_error) << ',' << format_double(r.output_loss) << ',' << format_double(r.total_discrepancy) << ',';
  for (std::size_t i = 0; i < r.layer_losses.size(); ++i) {
    if (i) s << ';';
    s << format_double(r.layer_losses[i]);
  }
  s << ',' << opt(r.angle) << ',' << opt(r.angle_ema) << ',' << r.matmul_count;
  return s.str();
}

MetricsWriter::MetricsWriter(const std::filesystem::path& path, bool write_header)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw std::runtime_error("cannot open metrics file " + path.string());
  if (write_header) write_raw(metrics_header());
}

void MetricsWriter::write(const MetricsRecord& r) {
  r.check();
  write_raw(to_csv_row(r));
}

void MetricsWriter::write_raw(const std::string& line) {
  std::lock_guard lock(mutex_);
  out_ << line << '\n';
  out_.flush();
  if (!out_) throw std::runtime_error("write failed for " + path_.string());
}

}  // namespace localprop
