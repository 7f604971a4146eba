#pragma once

// Flat text format for a trained tabular model and its discretizer.
//
//   wsts-model 1 <V> <k> <alpha> <frame_len>
//   discretizer <N> <M>
//   <lo> <hi>                                  one line per frame slot
//   records <count>
//   <slot> <order> <ctx_1> .. <ctx_order> <token> <count>
//
// Records are sorted by (slot, context, token) and only non-zero counts are
// stored. Reals use shortest round-trip formatting, so save/load is exact.

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "wsts/batch_io.hpp"
#include "wsts/sequence_model.hpp"
#include "wsts/trajectory.hpp"

namespace wsts {

struct ModelBundle {
  Discretizer discretizer;
  TabularMarkovModel model;
};

inline void write_model(std::ostream& os, const TabularMarkovModel& model, const Discretizer& d,
                        const std::string& tag = {}) {
  if (model.frame_len() != d.frame_len() || model.vocab_size() != d.vocab_size())
    throw std::invalid_argument("write_model: discretizer does not match model");
  if (!tag.empty()) os << "# config " << tag << '\n';
  os << "wsts-model 1 " << model.vocab_size() << ' ' << model.order() << ' '
     << detail::format_real(model.alpha()) << ' ' << model.frame_len() << '\n';
  os << "discretizer " << d.env().state_dim << ' ' << d.env().action_dim << '\n';
  for (const auto& r : d.ranges())
    os << detail::format_real(r.lo) << ' ' << detail::format_real(r.hi) << '\n';
  std::size_t n = 0;
  for (const auto& table : model.tables())
    for (const auto& [ctx, c] : table)
      for (auto v : c.by_token) n += (v != 0);
  os << "records " << n << '\n';
  for (std::size_t slot = 0; slot < model.tables().size(); ++slot) {
    for (const auto& [ctx, c] : model.tables()[slot]) {
      for (std::size_t tok = 0; tok < c.by_token.size(); ++tok) {
        if (c.by_token[tok] == 0) continue;
        os << slot << ' ' << ctx.size();
        for (auto t : ctx) os << ' ' << t;
        os << ' ' << tok << ' ' << c.by_token[tok] << '\n';
      }
    }
  }
}

inline ModelBundle read_model(std::istream& is) {
  std::string magic, alpha_str;
  int version = 0;
  std::size_t vocab = 0, order = 0, frame_len = 0;
  while ((is >> std::ws).peek() == '#') {
    std::string skip;
    std::getline(is, skip);
  }
  if (!(is >> magic >> version >> vocab >> order >> alpha_str >> frame_len) ||
      magic != "wsts-model" || version != 1)
    throw std::runtime_error("read_model: malformed header");
  std::string tag;
  EnvDescriptor env;
  if (!(is >> tag >> env.state_dim >> env.action_dim) || tag != "discretizer")
    throw std::runtime_error("read_model: missing discretizer section");
  if (env.frame_len() != frame_len) throw std::runtime_error("read_model: frame_len mismatch");
  std::vector<Discretizer::SlotRange> ranges(frame_len);
  for (auto& r : ranges) {
    std::string lo, hi;
    if (!(is >> lo >> hi)) throw std::runtime_error("read_model: truncated discretizer");
    r.lo = detail::parse_real(lo);
    r.hi = detail::parse_real(hi);
  }
  std::size_t n = 0;
  if (!(is >> tag >> n) || tag != "records") throw std::runtime_error("read_model: missing records");
  ModelBundle out{Discretizer(env, vocab, std::move(ranges)),
                  TabularMarkovModel(vocab, frame_len, order, detail::parse_real(alpha_str))};
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t slot = 0, ctx_len = 0;
    if (!(is >> slot >> ctx_len)) throw std::runtime_error("read_model: truncated record");
    TokenSeq ctx(ctx_len);
    for (auto& t : ctx)
      if (!(is >> t)) throw std::runtime_error("read_model: truncated context");
    Token tok = 0;
    std::uint64_t count = 0;
    if (!(is >> tok >> count)) throw std::runtime_error("read_model: truncated record");
    out.model.add_count(slot, ctx, tok, count);
  }
  return out;
}

inline void save_model(const std::string& path, const TabularMarkovModel& model, const Discretizer& d,
                       const std::string& tag = {}) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_model: cannot open " + path);
  write_model(os, model, d, tag);
}

inline ModelBundle load_model(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_model: cannot open " + path);
  return read_model(is);
}

}  // namespace wsts
