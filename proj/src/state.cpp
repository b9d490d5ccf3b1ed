#include "phylomarkov/state.hpp"

#include <stdexcept>

#include "phylomarkov/random.hpp"

namespace phylomarkov {

State::State(std::size_t dim) : dim_(static_cast<std::uint8_t>(dim)) {
  if (dim > kMaxStateDim) {
    throw std::invalid_argument("state dimension " + std::to_string(dim) + " exceeds " +
                                std::to_string(kMaxStateDim));
  }
}

State::State(std::initializer_list<int> coords) : State(coords.size()) {
  std::size_t i = 0;
  for (int c : coords) v_[i++] = c;
}

State& State::operator+=(const State& u) {
  for (std::size_t i = 0; i < dim_; ++i) v_[i] += u.v_[i];
  return *this;
}

State& State::operator-=(const State& u) {
  for (std::size_t i = 0; i < dim_; ++i) v_[i] -= u.v_[i];
  return *this;
}

std::string State::to_string() const {
  std::string s = "(";
  for (std::size_t i = 0; i < dim_; ++i) {
    if (i) s += ",";
    s += std::to_string(v_[i]);
  }
  return s + ")";
}

std::size_t StateHash::operator()(const State& x) const noexcept {
  std::uint64_t h = x.dim();
  for (int c : x.coords()) h = mix_seed(h, static_cast<std::uint64_t>(static_cast<std::uint32_t>(c)));
  return static_cast<std::size_t>(h);
}

}  // namespace phylomarkov
