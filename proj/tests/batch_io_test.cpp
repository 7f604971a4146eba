#include <gtest/gtest.h>

#include <bit>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>

#include "wsts/batch_io.hpp"
#include "wsts/envs.hpp"

namespace wsts {
namespace {

bool bit_equal(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

void expect_bit_identical(const OfflineBatch& a, const OfflineBatch& b) {
  ASSERT_EQ(a.env(), b.env());
  EXPECT_TRUE(bit_equal(a.gamma(), b.gamma()));
  EXPECT_EQ(a.provenance(), b.provenance());
  ASSERT_EQ(a.trajectories().size(), b.trajectories().size());
  for (std::size_t i = 0; i < a.trajectories().size(); ++i) {
    const auto& ta = a.trajectories()[i].transitions();
    const auto& tb = b.trajectories()[i].transitions();
    ASSERT_EQ(ta.size(), tb.size());
    for (std::size_t t = 0; t < ta.size(); ++t) {
      for (std::size_t k = 0; k < ta[t].state.size(); ++k) EXPECT_TRUE(bit_equal(ta[t].state[k], tb[t].state[k]));
      for (std::size_t k = 0; k < ta[t].action.size(); ++k) EXPECT_TRUE(bit_equal(ta[t].action[k], tb[t].action[k]));
      EXPECT_TRUE(bit_equal(ta[t].reward, tb[t].reward));
      EXPECT_EQ(ta[t].done, tb[t].done);
    }
  }
}

// Arbitrary finite doubles (including subnormals and extreme exponents)
// survive a write/read cycle bit-for-bit.
TEST(BatchIo, RoundTripIsBitExactForRandomFiniteValues) {
  std::mt19937_64 rng(99);
  auto any_finite = [&] {
    while (true) {
      double v = std::bit_cast<double>(rng());
      if (std::isfinite(v)) return v;
    }
  };
  OfflineBatch b(EnvDescriptor{3, 2}, 0.987654321, Provenance{"medium-replay", 42});
  for (int e = 0; e < 20; ++e) {
    std::vector<Transition> tr(1 + rng() % 9);
    for (auto& t : tr) t = {{any_finite(), any_finite(), 0.1}, {any_finite(), -0.0}, any_finite(), (rng() & 1) != 0};
    b.add(tr);
  }
  std::stringstream ss;
  write_batch(ss, b);
  auto back = read_batch(ss);
  expect_bit_identical(b, back);

  std::stringstream again;
  write_batch(again, back);
  EXPECT_EQ(ss.str(), again.str());
}

TEST(BatchIo, GeneratedBatchRoundTrips) {
  WindyCliffChain env;
  auto b = generate_batch(env, BehaviorPolicy{}, 30, 0.95, 5);
  std::stringstream ss;
  write_batch(ss, b);
  auto back = read_batch(ss);
  expect_bit_identical(b, back);
  for (std::size_t i = 0; i < b.trajectories().size(); ++i)
    EXPECT_EQ(b.trajectories()[i].reward_to_go(), back.trajectories()[i].reward_to_go());
}

TEST(BatchIo, HeaderAndColumns) {
  OfflineBatch b(EnvDescriptor{1, 1}, 1.0, Provenance{"expert", 3});
  b.add({{{0.5}, {1.0}, -1.0, true}});
  std::stringstream ss;
  write_batch(ss, b);
  EXPECT_EQ(ss.str(), "wsts-batch 1 1 1 1 expert 3\nepisode_id,step,s0,a0,reward,done\n0,0,0.5,1,-1,1\n");
}

TEST(BatchIo, ConfigTagLineIsWrittenAndSkipped) {
  OfflineBatch b(EnvDescriptor{1, 1}, 1.0, Provenance{"expert", 3});
  b.add({{{0.5}, {1.0}, -1.0, true}});
  std::stringstream ss;
  write_batch(ss, b, "00ff00ff00ff00ff");
  EXPECT_EQ(ss.str().rfind("# config 00ff00ff00ff00ff\nwsts-batch 1 ", 0), 0u);
  auto back = read_batch(ss);
  expect_bit_identical(b, back);
}

TEST(BatchIo, MalformedInputThrows) {
  std::stringstream bad_header("not-a-batch\n");
  EXPECT_THROW(read_batch(bad_header), std::runtime_error);
  std::stringstream bad_fields("wsts-batch 1 1 1 1 - 0\ncols\n0,0,1,2\n");
  EXPECT_THROW(read_batch(bad_fields), std::runtime_error);
  std::stringstream bad_step("wsts-batch 1 1 1 1 - 0\ncols\n0,1,1,2,3,0\n");
  EXPECT_THROW(read_batch(bad_step), std::runtime_error);
}

}  // namespace
}  // namespace wsts
