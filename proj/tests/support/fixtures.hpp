#pragma once

#include <string>

#include "mgrestore/feeder_model.hpp"

namespace testing_support {

inline std::string fixture(const std::string& name) { return std::string(MGRESTORE_FIXTURES) + "/" + name; }

/// Balanced three-phase line with unequal self and mutual terms, ohm.
inline mgrestore::Branch line(const std::string& id, const std::string& from, const std::string& to,
                              bool switchable = false, double scale = 1.0) {
  mgrestore::Branch b;
  b.id = id;
  b.from = from;
  b.to = to;
  b.phases = mgrestore::PhaseSet::all();
  b.switchable = switchable;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      b.impedance(i, j) = i == j ? std::complex<double>(0.35, 0.65) * scale : std::complex<double>(0.10, 0.30) * scale;
  return b;
}

inline mgrestore::Node node(const std::string& id, double kv = 2.4018) {
  return {id, mgrestore::PhaseSet::all(), kv};
}

inline mgrestore::Der droop(const std::string& id, const std::string& at, double pmax_kw, bool black_start = true) {
  mgrestore::Der d;
  d.id = id;
  d.node = at;
  d.kind = mgrestore::DerKind::Droop;
  d.black_start = black_start;
  d.phases = mgrestore::PhaseSet::all();
  d.p_min = 0.0;
  d.p_max = pmax_kw;
  d.q_min = -pmax_kw / 4;
  d.q_max = pmax_kw / 2;
  return d;
}

inline mgrestore::Load load(const std::string& id, const std::string& at, double kw, double kvar) {
  mgrestore::Load l;
  l.id = id;
  l.node = at;
  l.phases = mgrestore::PhaseSet::all();
  l.p = {kw, kw, kw};
  l.q = {kvar, kvar, kvar};
  return l;
}

inline mgrestore::FeederModel empty_feeder(const std::string& name) {
  mgrestore::FeederModel f;
  f.name = name;
  f.base = {1.0, 2.4018};
  return f;
}

}  // namespace testing_support
