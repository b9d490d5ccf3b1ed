#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>

namespace phylomarkov {

inline constexpr std::size_t kMaxStateDim = 8;

/// A point of the integer lattice Z^d with d <= kMaxStateDim, stored inline.
class State {
 public:
  State() = default;
  explicit State(std::size_t dim);
  State(std::initializer_list<int> coords);

  std::size_t dim() const { return dim_; }
  int operator[](std::size_t i) const { return v_[i]; }
  int& operator[](std::size_t i) { return v_[i]; }

  std::span<const int> coords() const { return {v_.data(), dim_}; }

  State& operator+=(const State& u);
  State& operator-=(const State& u);
  friend State operator+(State a, const State& b) { return a += b; }
  friend State operator-(State a, const State& b) { return a -= b; }

  friend bool operator==(const State&, const State&) = default;
  friend auto operator<=>(const State&, const State&) = default;

  std::string to_string() const;

 private:
  std::array<int, kMaxStateDim> v_{};
  std::uint8_t dim_ = 0;
};

struct StateHash {
  std::size_t operator()(const State& x) const noexcept;
};

}  // namespace phylomarkov
