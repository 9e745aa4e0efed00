#include <gtest/gtest.h>

#include <filesystem>

#include "halrp/checkpoint.hpp"

using namespace halrp;

namespace {

struct Fixture {
  RunConfig config;
  std::vector<TaskDataset> tasks;
  RunResult run;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture x;
    x.config = parse_config(
        "dataset = synthetic\nclasses = 3\ndims = 12\nsamples_per_class = 60\ntasks = 3\n"
        "input = 12\nlayers = dense:10,relu,dense:8,relu\nepochs = 6\nwarmup_epochs = 2\nlr = 0.05\n"
        "batch_size = 16\nprune = absolute\np = 0\nprune_tau = 1e-3\nprune_gamma = 0.5\n");
    x.tasks = build_tasks(x.config.data);
    x.run = run_sequence(x.config.experiment, x.tasks);
    return x;
  }();
  return f;
}

Checkpoint make_checkpoint() { return {fixture().config.data, fixture().run.state}; }

}  // namespace

TEST(Checkpoint, RoundTripIsExact) {
  const auto ck = make_checkpoint();
  const auto bytes = encode_checkpoint(ck);
  EXPECT_EQ(decode_checkpoint(bytes), ck);
  EXPECT_EQ(encode_checkpoint(decode_checkpoint(bytes)), bytes);
  const auto path = std::filesystem::path(::testing::TempDir()) / "state.halrp";
  save_checkpoint(path, ck);
  EXPECT_EQ(load_checkpoint(path), ck);
}

TEST(Checkpoint, StlOwnWeightsSurvive) {
  auto cfg = fixture().config.experiment;
  cfg.mode = Mode::Stl;
  const auto run = run_sequence(cfg, fixture().tasks);
  const Checkpoint ck{fixture().config.data, run.state};
  EXPECT_EQ(decode_checkpoint(encode_checkpoint(ck)), ck);
}

TEST(Checkpoint, ReloadedStateReproducesTheFinalRow) {
  const auto ck = decode_checkpoint(encode_checkpoint(make_checkpoint()));
  const auto tasks = build_tasks(ck.data);
  const auto row = evaluate_all(ck.state, tasks);
  EXPECT_EQ(row, ck.state.history.row(ck.state.history.tasks() - 1));
}

TEST(Checkpoint, EveryFlippedByteIsDetected) {
  const auto bytes = encode_checkpoint(make_checkpoint());
  for (std::size_t i = 0; i < bytes.size(); i += 97) {
    auto bad = bytes;
    bad[i] ^= 0x5a;
    EXPECT_THROW(decode_checkpoint(bad), FormatError) << "byte " << i;
  }
  auto bad = bytes;
  bad[bytes.size() / 2] ^= 1;
  EXPECT_THROW(decode_checkpoint(bad), ChecksumError);
}

TEST(Checkpoint, VersionAndTruncation) {
  auto bytes = encode_checkpoint(make_checkpoint());
  auto future = bytes;
  future[8] = 2;
  const auto sum = fnv1a64(future.data(), future.size() - 8);
  for (int b = 0; b < 8; ++b) future[future.size() - 8 + b] = static_cast<std::uint8_t>(sum >> (8 * b));
  try {
    decode_checkpoint(future);
    FAIL() << "expected a version error";
  } catch (const ChecksumError&) {
    FAIL() << "checksum was rewritten";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos) << e.what();
  }
  bytes.resize(20);
  EXPECT_THROW(decode_checkpoint(bytes), FormatError);
  EXPECT_THROW(load_checkpoint("/nonexistent.halrp"), Error);
}

TEST(Fnv1a64, KnownVectors) {
  EXPECT_EQ(fnv1a64(nullptr, 0), 0xcbf29ce484222325ULL);
  const std::uint8_t a[] = {'a'};
  EXPECT_EQ(fnv1a64(a, 1), 0xaf63dc4c8601ec8cULL);
}
