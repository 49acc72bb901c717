#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace nmpg {

/// Mixed-radix codec for joint labels. The first coordinate is the most
/// significant digit, so codes enumerate tuples in lexicographic order.
class MixedRadix {
 public:
  MixedRadix() = default;
  explicit MixedRadix(std::vector<int> radices) : radices_(std::move(radices)) {
    size_ = 1;
    for (int r : radices_) {
      if (r <= 0) throw std::invalid_argument("MixedRadix: radix must be positive");
      if (size_ > kLimit / static_cast<std::size_t>(r))
        throw std::overflow_error("MixedRadix: joint space too large to index");
      size_ *= static_cast<std::size_t>(r);
    }
  }

  std::size_t size() const { return size_; }
  int digits() const { return static_cast<int>(radices_.size()); }
  const std::vector<int>& radices() const { return radices_; }

  std::size_t encode(std::span<const int> x) const {
    std::size_t code = 0;
    for (std::size_t k = 0; k < radices_.size(); ++k) {
      if (x[k] < 0 || x[k] >= radices_[k])
        throw std::out_of_range("MixedRadix: digit out of range");
      code = code * static_cast<std::size_t>(radices_[k]) + static_cast<std::size_t>(x[k]);
    }
    return code;
  }

  void decode(std::size_t code, std::span<int> out) const {
    for (std::size_t k = radices_.size(); k-- > 0;) {
      out[k] = static_cast<int>(code % static_cast<std::size_t>(radices_[k]));
      code /= static_cast<std::size_t>(radices_[k]);
    }
  }

  std::vector<int> decode(std::size_t code) const {
    std::vector<int> out(radices_.size());
    decode(code, out);
    return out;
  }

  // Odometer increment; returns false after the last tuple.
  bool next(std::span<int> x) const {
    for (std::size_t k = radices_.size(); k-- > 0;) {
      if (++x[k] < radices_[k]) return true;
      x[k] = 0;
    }
    return false;
  }

 private:
  static constexpr std::size_t kLimit = std::size_t{1} << 52;
  std::vector<int> radices_;
  std::size_t size_ = 1;
};

}  // namespace nmpg
