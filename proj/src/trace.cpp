#include "ringlock/trace.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "ringlock/errors.hpp"

namespace ringlock {

Trace::Trace(double sample_rate_hz, std::size_t length)
    : sample_rate_hz_(sample_rate_hz), length_(length) {
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
    throw ValidationError("trace sample rate must be positive and finite");
  }
}

std::vector<double>& Trace::add_channel(std::string name) {
  if (has_channel(name)) throw ValidationError("duplicate trace channel '" + name + "'");
  names_.push_back(std::move(name));
  data_.emplace_back(length_, 0.0);
  return data_.back();
}

const std::vector<double>& Trace::channel(std::string_view name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw ValidationError("no trace channel '" + std::string(name) + "'");
  return data_[static_cast<std::size_t>(it - names_.begin())];
}

bool Trace::has_channel(std::string_view name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

void Trace::write_csv(std::ostream& out) const {
  out << "time_s";
  for (const auto& n : names_) out << ',' << n;
  out << '\n';
  fmt::memory_buffer line;
  for (std::size_t i = 0; i < length_; ++i) {
    line.clear();
    fmt::format_to(std::back_inserter(line), "{:.15g}", time(i));
    for (const auto& ch : data_) fmt::format_to(std::back_inserter(line), ",{:.15g}", ch[i]);
    line.push_back('\n');
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
  }
}

}  // namespace ringlock
