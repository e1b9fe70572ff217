#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mgrestore {

enum class Phase : std::uint8_t { A = 0, B = 1, C = 2 };

inline constexpr std::array<Phase, 3> kAllPhases{Phase::A, Phase::B, Phase::C};

constexpr std::size_t index_of(Phase p) { return static_cast<std::size_t>(p); }

constexpr char phase_letter(Phase p) { return "abc"[index_of(p)]; }

inline std::optional<Phase> phase_from_letter(char c) {
  switch (c) {
    case 'a': case 'A': return Phase::A;
    case 'b': case 'B': return Phase::B;
    case 'c': case 'C': return Phase::C;
    default: return std::nullopt;
  }
}

/// Nominal angle of a phase in radians: 0, -120 and +120 degrees.
inline double nominal_angle(Phase p) {
  constexpr double third = 2.0 * std::numbers::pi / 3.0;
  switch (p) {
    case Phase::A: return 0.0;
    case Phase::B: return -third;
    case Phase::C: return third;
  }
  return 0.0;
}

inline std::complex<double> nominal_phasor(Phase p) { return std::polar(1.0, nominal_angle(p)); }

/// Subset of {a, b, c}.
class PhaseSet {
 public:
  constexpr PhaseSet() = default;
  constexpr explicit PhaseSet(std::uint8_t bits) : bits_(bits & 0x7u) {}

  static constexpr PhaseSet all() { return PhaseSet{0x7u}; }

  /// Parses letters such as "abc" or "ac"; nullopt on any other character or repetition.
  static std::optional<PhaseSet> parse(std::string_view letters) {
    PhaseSet s;
    for (char c : letters) {
      auto p = phase_from_letter(c);
      if (!p || s.contains(*p)) return std::nullopt;
      s.insert(*p);
    }
    return s;
  }

  constexpr bool contains(Phase p) const { return (bits_ >> index_of(p)) & 1u; }
  constexpr void insert(Phase p) { bits_ = static_cast<std::uint8_t>(bits_ | (1u << index_of(p))); }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::uint8_t bits() const { return bits_; }
  constexpr bool is_subset_of(PhaseSet other) const { return (bits_ & ~other.bits_) == 0; }

  std::size_t size() const {
    std::size_t n = 0;
    for (Phase p : kAllPhases) n += contains(p) ? 1 : 0;
    return n;
  }

  std::vector<Phase> members() const {
    std::vector<Phase> out;
    for (Phase p : kAllPhases)
      if (contains(p)) out.push_back(p);
    return out;
  }

  std::string to_string() const {
    std::string s;
    for (Phase p : members()) s.push_back(phase_letter(p));
    return s;
  }

  friend constexpr bool operator==(PhaseSet, PhaseSet) = default;

 private:
  std::uint8_t bits_ = 0;
};

/// Per-phase scalar values indexed by Phase; absent phases hold 0.
using PhaseValues = std::array<double, 3>;

inline double phase_sum(const PhaseValues& v) { return v[0] + v[1] + v[2]; }

}  // namespace mgrestore
