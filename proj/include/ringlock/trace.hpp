#pragma once

#include <cstddef>
#include <deque>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace ringlock {

/// Multichannel series on a uniform time grid starting at t = 0.
class Trace {
 public:
  Trace(double sample_rate_hz, std::size_t length);

  double sample_rate() const noexcept { return sample_rate_hz_; }
  double time_step() const noexcept { return 1.0 / sample_rate_hz_; }
  std::size_t size() const noexcept { return length_; }
  double time(std::size_t i) const noexcept { return static_cast<double>(i) / sample_rate_hz_; }

  /// Adds a zero-filled channel and returns it for filling. Names must be unique.
  std::vector<double>& add_channel(std::string name);
  const std::vector<double>& channel(std::string_view name) const;
  bool has_channel(std::string_view name) const;
  const std::vector<std::string>& channel_names() const noexcept { return names_; }

  /// CSV with a time_s column followed by one column per channel, 15 significant digits.
  void write_csv(std::ostream& out) const;

 private:
  double sample_rate_hz_;
  std::size_t length_;
  std::vector<std::string> names_;
  std::deque<std::vector<double>> data_;  // deque: references from add_channel stay valid
};

}  // namespace ringlock
