#include <doctest.h>

#include <filesystem>

#include "songpop/network.hpp"
#include "support/oracles.hpp"

using namespace songpop;
using songpop::testing::gradient_check;
using songpop::testing::naive_forward;
using songpop::testing::random_batch;
using songpop::testing::random_masks;
using songpop::testing::randomize;
using songpop::testing::reduced_arch;

TEST_CASE("init_model shapes follow the trunk depth") {
  const auto two = init_model<double>(ArchConfig::standard(TrunkDepth::kTwo, TaskMode::kFull), 1);
  REQUIRE(two.params.trunk.size() == 2);
  CHECK(two.params.trunk[0].weight.rows() == 512);
  CHECK(two.params.trunk[0].weight.cols() == 768);
  CHECK(two.params.trunk[1].weight.rows() == 256);
  CHECK(two.params.trunk[1].weight.cols() == 512);

  const auto three =
      init_model<double>(ArchConfig::standard(TrunkDepth::kThree, TaskMode::kPopularity), 1);
  REQUIRE(three.params.trunk.size() == 3);
  CHECK(three.params.trunk[0].weight.rows() == 512);
  CHECK(three.params.trunk[1].weight.rows() == 384);
  CHECK(three.params.trunk[1].weight.cols() == 512);
  CHECK(three.params.trunk[2].weight.rows() == 256);
  CHECK(three.params.trunk[2].weight.cols() == 384);
  CHECK(three.params.heads.size() == 2);

  REQUIRE(two.params.heads.size() == 7);
  const auto& head = two.params.heads[3];
  REQUIRE(head.size() == 3);
  CHECK(head[0].weight.rows() == 128);
  CHECK(head[0].weight.cols() == 256);
  CHECK(head[1].weight.rows() == 64);
  CHECK(head[2].weight.rows() == 1);
  CHECK(head[2].weight.cols() == 64);
  CHECK_FALSE(head[2].normalized());
}

TEST_CASE("init_model is deterministic and follows the init scheme") {
  const ArchConfig arch = ArchConfig::standard(TrunkDepth::kTwo, TaskMode::kFull);
  auto a = init_model<double>(arch, 42);
  auto b = init_model<double>(arch, 42);
  auto c = init_model<double>(arch, 43);
  auto sa = tensors(a.params);
  auto sb = tensors(b.params);
  auto sc = tensors(c.params);
  bool identical = true, differs = false;
  for (std::size_t s = 0; s < sa.size(); ++s) {
    for (Eigen::Index i = 0; i < sa[s].size; ++i) {
      identical &= sa[s].data[i] == sb[s].data[i];
      differs |= sa[s].data[i] != sc[s].data[i];
    }
  }
  CHECK(identical);
  CHECK(differs);

  const double bound = std::sqrt(1.0 / 768.0);
  CHECK(a.params.trunk[0].weight.cwiseAbs().maxCoeff() <= bound);
  CHECK(a.params.trunk[0].bias.isZero());
  CHECK(a.params.trunk[0].gain.isOnes());
  CHECK(a.trunk_stats[0].var.isOnes());
  CHECK(a.params.agg_weights.isApprox(VectorXd::Constant(4, 0.25)));
  CHECK(a.params.agg_bias(0) == 0.0);
}

TEST_CASE("aggregate_layers") {
  Rng rng(5);
  MatrixXd seg(768, 4);
  for (Eigen::Index i = 0; i < seg.size(); ++i) seg.data()[i] = rng.normal();

  SUBCASE("one-hot weights select a layer exactly") {
    VectorXd w = VectorXd::Zero(4);
    w(2) = 1.0;
    const VectorXd out = aggregate_layers<double>(seg, w, 0.0);
    CHECK((out.array() == seg.col(2).array()).all());
  }
  SUBCASE("equal weights on identical layers reproduce the layer") {
    MatrixXd same(768, 4);
    for (int l = 0; l < 4; ++l) same.col(l) = seg.col(0);
    const VectorXd out = aggregate_layers<double>(same, VectorXd::Constant(4, 0.25), 0.0);
    CHECK((out - seg.col(0)).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("matches a scalar loop") {
    VectorXd w(4);
    w << 0.3, -1.2, 0.7, 2.1;
    const double bias = -0.4;
    const VectorXd out = aggregate_layers<double>(seg, w, bias);
    double max_err = 0.0;
    for (int d = 0; d < 768; ++d) {
      double s = bias;
      for (int l = 0; l < 4; ++l) s += w(l) * seg(d, l);
      max_err = std::max(max_err, std::abs(s - out(d)));
    }
    CHECK(max_err < 1e-12);
  }
}

TEST_CASE("all-zero parameters give the midpoint of every output range") {
  const ArchConfig arch = ArchConfig::standard(TrunkDepth::kTwo, TaskMode::kFull);
  auto m = init_model<double>(arch, 3);
  for (auto& slot : tensors(m.params)) std::fill_n(slot.data, slot.size, 0.0);
  Rng rng(1);
  const auto batch = random_batch(768, 5, rng);
  const MatrixXd pred = forward(m, batch, Phase::kEval).predictions;
  CHECK((pred.topRows(2).array() == 50.0).all());
  CHECK((pred.bottomRows(5).array() == 3.0).all());
}

TEST_CASE("eval forward is deterministic") {
  const ArchConfig arch = ArchConfig::standard(TrunkDepth::kThree, TaskMode::kFull);
  const auto m = init_model<double>(arch, 9);
  Rng rng(2);
  const auto batch = random_batch(768, 6, rng);
  const MatrixXd a = forward(m, batch, Phase::kEval).predictions;
  Rng other(77);
  const MatrixXd b = forward(m, batch, Phase::kEval, &other).predictions;
  CHECK((a.array() == b.array()).all());
}

TEST_CASE("forward matches the naive reference implementation") {
  for (int seed = 0; seed < 6; ++seed) {
    CAPTURE(seed);
    Rng rng(100 + seed);
    const auto depth = seed % 2 ? TrunkDepth::kThree : TrunkDepth::kTwo;
    const auto tasks = seed % 3 ? TaskMode::kFull : TaskMode::kPopularity;
    ArchConfig arch = reduced_arch(depth, tasks, 0.3, 0.1);
    arch.input_dim = 16;
    auto m = init_model<double>(arch, static_cast<std::uint64_t>(seed));
    randomize(m, rng);
    const auto batch = random_batch(16, 5, rng);
    const auto masks = random_masks(arch, 5, rng);
    for (Phase phase : {Phase::kEval, Phase::kTrain}) {
      const MatrixXd got = forward(m, batch, phase, nullptr, &masks).predictions;
      const auto want = naive_forward(m, batch, phase, masks.masks);
      double max_err = 0.0;
      for (int t = 0; t < arch.n_tasks(); ++t) {
        for (int j = 0; j < 5; ++j) max_err = std::max(max_err, std::abs(got(t, j) - want[t][j]));
      }
      CHECK(max_err < 1e-10);
    }
  }
}

TEST_CASE("train phase rejects a batch of one") {
  const auto m = init_model<double>(reduced_arch(TrunkDepth::kTwo, TaskMode::kPopularity, 0, 0), 1);
  Rng rng(1);
  const auto batch = random_batch(8, 1, rng);
  CHECK_THROWS_AS(forward(m, batch, Phase::kTrain, &rng), DimensionError);
  CHECK_NOTHROW(forward(m, batch, Phase::kEval));
}

TEST_CASE("non-finite activations are reported with the layer") {
  auto m = init_model<double>(reduced_arch(TrunkDepth::kTwo, TaskMode::kPopularity, 0, 0), 1);
  m.params.trunk[1].weight(0, 0) = std::numeric_limits<double>::infinity();
  Rng rng(1);
  const auto batch = random_batch(8, 3, rng);
  try {
    forward(m, batch, Phase::kEval);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("trunk layer 2") != std::string::npos);
  }
}

TEST_CASE("zero upstream gradients give all-zero gradients") {
  const ArchConfig arch = reduced_arch(TrunkDepth::kThree, TaskMode::kFull, 0.3, 0.1);
  auto m = init_model<double>(arch, 4);
  Rng rng(4);
  randomize(m, rng);
  const auto batch = random_batch(8, 4, rng);
  const auto r = forward(m, batch, Phase::kTrain, &rng);
  Params<double> g = backward(m, r.cache, MatrixXd(MatrixXd::Zero(7, 4)));
  for (const auto& slot : tensors(g)) {
    for (Eigen::Index i = 0; i < slot.size; ++i) CHECK(slot.data[i] == 0.0);
  }
}

TEST_CASE("backward matches central finite differences") {
  int checked = 0;
  for (int seed = 0; seed < 24; ++seed) {
    const auto depth = seed % 2 ? TrunkDepth::kThree : TrunkDepth::kTwo;
    const auto tasks = (seed / 2) % 2 ? TaskMode::kFull : TaskMode::kPopularity;
    const bool dropout = (seed / 4) % 2 == 1;
    const ArchConfig arch = reduced_arch(depth, tasks, dropout ? 0.3 : 0.0, dropout ? 0.1 : 0.0);
    Rng rng(1000 + static_cast<std::uint64_t>(seed));
    auto m = init_model<double>(arch, static_cast<std::uint64_t>(seed));
    randomize(m, rng);
    const auto batch = random_batch(8, 4, rng);
    const auto masks = random_masks(arch, 4, rng);
    MatrixXd upstream(arch.n_tasks(), 4);
    for (Eigen::Index i = 0; i < upstream.size(); ++i) upstream.data()[i] = rng.normal();
    const auto res = gradient_check(m, batch, upstream, masks);
    CAPTURE(seed);
    CAPTURE(res.worst);
    CHECK(res.max_rel_error < 1e-4);
    ++checked;
  }
  CHECK(checked >= 20);
}

TEST_CASE("duplicating the batch leaves mean-loss gradients unchanged") {
  const ArchConfig arch = reduced_arch(TrunkDepth::kTwo, TaskMode::kFull, 0.0, 0.0);
  auto m = init_model<double>(arch, 8);
  Rng rng(8);
  randomize(m, rng);
  const auto batch = random_batch(8, 4, rng);
  Batch<double> doubled;
  for (int l = 0; l < 4; ++l) {
    doubled.layers[l].resize(8, 8);
    doubled.layers[l] << batch.layers[l], batch.layers[l];
  }
  // Per-example-mean loss: upstream scaled by 1/B.
  MatrixXd up(7, 4);
  for (Eigen::Index i = 0; i < up.size(); ++i) up.data()[i] = rng.normal();
  MatrixXd up2(7, 8);
  up2 << up, up;
  const auto r1 = forward(m, batch, Phase::kTrain, &rng);
  const auto r2 = forward(m, doubled, Phase::kTrain, &rng);
  Params<double> g1 = backward(m, r1.cache, MatrixXd(up / 4.0));
  Params<double> g2 = backward(m, r2.cache, MatrixXd(up2 / 8.0));
  auto s1 = tensors(g1);
  auto s2 = tensors(g2);
  double max_err = 0.0;
  for (std::size_t s = 0; s < s1.size(); ++s) {
    for (Eigen::Index i = 0; i < s1[s].size; ++i) {
      max_err = std::max(max_err, std::abs(s1[s].data[i] - s2[s].data[i]));
    }
  }
  CHECK(max_err < 1e-8);
}

TEST_CASE("outputs stay inside their ranges on random inputs") {
  for (int seed = 0; seed < 5; ++seed) {
    const ArchConfig arch = ArchConfig::standard(seed % 2 ? TrunkDepth::kThree : TrunkDepth::kTwo,
                                                 TaskMode::kFull);
    const auto m = init_model<double>(arch, static_cast<std::uint64_t>(seed));
    Rng rng(static_cast<std::uint64_t>(seed) + 50);
    const auto batch = random_batch(768, 16, rng);
    for (Phase phase : {Phase::kEval, Phase::kTrain}) {
      const MatrixXd p = forward(m, batch, phase, &rng).predictions;
      CHECK((p.topRows(2).array() > 0.0).all());
      CHECK((p.topRows(2).array() < 100.0).all());
      CHECK((p.bottomRows(5).array() > 1.0).all());
      CHECK((p.bottomRows(5).array() < 5.0).all());
    }
  }
}

TEST_CASE("running statistics follow the momentum rule") {
  const ArchConfig arch = reduced_arch(TrunkDepth::kTwo, TaskMode::kPopularity, 0.0, 0.0);
  auto m = init_model<double>(arch, 2);
  Rng rng(2);
  const auto batch = random_batch(8, 6, rng);
  const auto r = forward(m, batch, Phase::kTrain, &rng);
  const VectorXd before = m.trunk_stats[0].var;
  commit_batch_statistics(m, r.cache);
  const VectorXd expect = 0.9 * before + 0.1 * r.cache.trunk[0].batch_var;
  CHECK((m.trunk_stats[0].var - expect).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("checkpoint round trip") {
  const ArchConfig arch = ArchConfig::standard(TrunkDepth::kThree, TaskMode::kFull);
  auto m = init_model<double>(arch, 17);
  Rng rng(17);
  m.params.log_variance(3) = 0.75;
  m.head_stats[2][1].var(5) = 1.5;
  const std::string bytes = encode_checkpoint(m);
  const auto loaded = decode_checkpoint<double>(bytes);
  CHECK(loaded.arch == m.arch);
  CHECK(encode_checkpoint(loaded) == bytes);
  CHECK(loaded.params.log_variance(3) == 0.75);
  CHECK(loaded.head_stats[2][1].var(5) == 1.5);
  CHECK(static_cast<float>(loaded.params.trunk[0].weight(3, 7)) ==
        static_cast<float>(m.params.trunk[0].weight(3, 7)));

  std::string bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint<double>(bad), FormatError);
  CHECK_THROWS_AS(decode_checkpoint<double>(bytes.substr(0, bytes.size() - 3)), IoError);

  const auto path = std::filesystem::temp_directory_path() / "songpop_ckpt_test.bin";
  save_checkpoint(path, m);
  CHECK(encode_checkpoint(load_checkpoint<float>(path)) == bytes);
  std::filesystem::remove(path);
}
