#pragma once

// Newline-delimited batch files.
//
//   wsts-batch 1 <N> <M> <gamma> <policy> <seed>
//   episode_id,step,s0..s{N-1},a0..a{M-1},reward,done
//   0,0,<s0>,...,<reward>,0
//   ...
//
// Reals are written in shortest round-trip form, so a write/read cycle is
// bit-exact for finite values. Reward-to-go is recomputed from gamma on load.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "wsts/trajectory.hpp"

namespace wsts {

namespace detail {

inline std::string format_real(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc{}) throw std::runtime_error("format_real: conversion failed");
  return std::string(buf, res.ptr);
}

inline double parse_real(std::string_view s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::runtime_error("parse_real: malformed number '" + std::string(s) + "'");
  return v;
}

template <class Int>
Int parse_int(std::string_view s) {
  Int v{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::runtime_error("parse_int: malformed integer '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

/// `tag`, when non-empty, is written as a leading "# config <tag>" line.
inline void write_batch(std::ostream& os, const OfflineBatch& batch, const std::string& tag = {}) {
  const auto& env = batch.env();
  std::string policy = batch.provenance().policy.empty() ? "-" : batch.provenance().policy;
  if (policy.find_first_of(" \t\n") != std::string::npos)
    throw std::invalid_argument("write_batch: policy label must not contain whitespace");
  if (!tag.empty()) os << "# config " << tag << '\n';
  os << "wsts-batch 1 " << env.state_dim << ' ' << env.action_dim << ' '
     << detail::format_real(batch.gamma()) << ' ' << policy << ' ' << batch.provenance().seed
     << '\n';
  os << "episode_id,step";
  for (std::size_t i = 0; i < env.state_dim; ++i) os << ",s" << i;
  for (std::size_t i = 0; i < env.action_dim; ++i) os << ",a" << i;
  os << ",reward,done\n";
  std::size_t ep = 0;
  for (const auto& traj : batch.trajectories()) {
    for (std::size_t t = 0; t < traj.size(); ++t) {
      const auto& tr = traj.transitions()[t];
      os << ep << ',' << t;
      for (double v : tr.state) os << ',' << detail::format_real(v);
      for (double v : tr.action) os << ',' << detail::format_real(v);
      os << ',' << detail::format_real(tr.reward) << ',' << (tr.done ? 1 : 0) << '\n';
    }
    ++ep;
  }
}

inline OfflineBatch read_batch(std::istream& is) {
  std::string line;
  do {
    if (!std::getline(is, line)) throw std::runtime_error("read_batch: missing header");
  } while (!line.empty() && line[0] == '#');
  std::istringstream hs(line);
  std::string magic, policy;
  int version = 0;
  EnvDescriptor env;
  std::string gamma_str;
  std::uint64_t seed = 0;
  if (!(hs >> magic >> version >> env.state_dim >> env.action_dim >> gamma_str >> policy >> seed) ||
      magic != "wsts-batch" || version != 1)
    throw std::runtime_error("read_batch: malformed header");
  OfflineBatch batch(env, detail::parse_real(gamma_str),
                     Provenance{policy == "-" ? std::string{} : policy, seed});
  if (!std::getline(is, line)) throw std::runtime_error("read_batch: missing column line");

  const std::size_t ncols = 2 + env.state_dim + env.action_dim + 2;
  std::vector<Transition> current;
  long long current_ep = -1;
  std::size_t expected_step = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto f = detail::split(line, ',');
    if (f.size() != ncols) throw std::runtime_error("read_batch: wrong field count");
    auto ep = detail::parse_int<long long>(f[0]);
    auto step = detail::parse_int<std::size_t>(f[1]);
    if (ep != current_ep) {
      if (!current.empty()) batch.add(std::move(current));
      current.clear();
      current_ep = ep;
      expected_step = 0;
    }
    if (step != expected_step) throw std::runtime_error("read_batch: steps out of order");
    ++expected_step;
    Transition tr;
    std::size_t c = 2;
    for (std::size_t i = 0; i < env.state_dim; ++i) tr.state.push_back(detail::parse_real(f[c++]));
    for (std::size_t i = 0; i < env.action_dim; ++i) tr.action.push_back(detail::parse_real(f[c++]));
    tr.reward = detail::parse_real(f[c++]);
    tr.done = detail::parse_int<int>(f[c]) != 0;
    current.push_back(std::move(tr));
  }
  if (!current.empty()) batch.add(std::move(current));
  return batch;
}

inline void save_batch(const std::string& path, const OfflineBatch& batch, const std::string& tag = {}) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_batch: cannot open " + path);
  write_batch(os, batch, tag);
}

inline OfflineBatch load_batch(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_batch: cannot open " + path);
  return read_batch(is);
}

}  // namespace wsts
