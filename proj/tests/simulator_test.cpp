#include <gtest/gtest.h>

#include <cmath>

#include "relearn/simulator.hpp"
#include "test_support.hpp"

namespace relearn {
namespace {

using testing::action;
using testing::atom;
using testing::load_context;
using testing::load_domain;

class ScriptedPolicy : public EpisodePolicy {
 public:
  explicit ScriptedPolicy(std::vector<PolicyDecision> script) : script_(std::move(script)) {}
  PolicyDecision next(const State&) override {
    return i_ < script_.size() ? script_[i_++] : PolicyDecision::none();
  }

 private:
  std::vector<PolicyDecision> script_;
  std::size_t i_ = 0;
};

class UniformPolicy : public EpisodePolicy {
 public:
  UniformPolicy(const TaskContext& ctx, std::uint64_t seed) : ctx_(ctx), rng_(seed) {}
  PolicyDecision next(const State&) override {
    return PolicyDecision::act(ctx_.actions()[uniform_index(rng_, ctx_.actions().size())]);
  }

 private:
  const TaskContext& ctx_;
  Rng rng_;
};

struct GripperFixture : ::testing::Test {
  std::shared_ptr<const Domain> domain = load_domain("gripper/domain.pddl");
  std::shared_ptr<const TaskContext> ctx = load_context(domain, "gripper/train/train-01.pddl");
  Simulator sim{ctx};
  const Task& task = ctx->task();
};

TEST_F(GripperFixture, PickAppliesEffects) {
  Transition t = sim.step(task.init, action(task, "pick", {"ball1", "rooma", "left"}));
  EXPECT_TRUE(t.next_state.contains(atom(task, "carrying", {"ball1", "left"})));
  EXPECT_FALSE(t.next_state.contains(atom(task, "at", {"ball1", "rooma"})));
  EXPECT_FALSE(t.next_state.contains(atom(task, "free", {"left"})));
  EXPECT_EQ(t.next_state.size(), task.init.size() - 1);
}

TEST_F(GripperFixture, InapplicableIsNoop) {
  Transition t = sim.step(task.init, action(task, "drop", {"ball1", "rooma", "left"}));
  EXPECT_TRUE(t.is_noop());
  EXPECT_EQ(t.next_state, task.init);
}

TEST_F(GripperFixture, IllTypedActionThrows) {
  GroundAction bad = action(task, "move", {"rooma", "roomb"});
  bad.args[1] = *task.find_object("ball1");
  EXPECT_THROW(sim.step(task.init, bad), ModelError);
}

// No-op closure and frame property over every action at every state reached
// by a random walk.
TEST_F(GripperFixture, NoopClosureAndFrame) {
  Rng rng(3);
  State s = task.init;
  for (int i = 0; i < 200; ++i) {
    for (std::uint32_t a = 0; a < ctx->actions().size(); ++a) {
      Transition t = sim.step(s, ctx->actions()[a]);
      auto ops = ctx->gt_model().operators_for(a);
      PackedState ps = ctx->pack(s);
      bool applicable = !ops.empty() && ctx->gt_model().operators()[ops[0]].applicable(ps);
      if (!applicable) {
        EXPECT_EQ(t.next_state, s);
        continue;
      }
      const GroundOperator& g = ctx->gt_model().operators()[ops[0]];
      for (std::uint32_t id = 0; id < ctx->atoms().size(); ++id) {
        bool touched = std::count(g.add.begin(), g.add.end(), id) || std::count(g.del.begin(), g.del.end(), id);
        if (!touched) EXPECT_EQ(t.next_state.contains(ctx->atoms().atom(id)), s.contains(ctx->atoms().atom(id)));
      }
    }
    s = sim.step(s, ctx->actions()[uniform_index(rng, ctx->actions().size())]).next_state;
  }
}

TEST_F(GripperFixture, RandomEpisodeUsesFullHorizon) {
  UniformPolicy p(*ctx, 11);
  std::vector<Transition> dataset;
  EpisodeLog log = run_episode(p, sim, 5, &dataset);
  EXPECT_EQ(log.transitions.size(), 5u);
  EXPECT_EQ(dataset.size(), 5u);
  EXPECT_FALSE(log.reset_requested);
  EXPECT_TRUE(replay_matches(log, sim));
}

TEST_F(GripperFixture, ResetEndsEpisodeEarly) {
  ScriptedPolicy p({PolicyDecision::act(action(task, "pick", {"ball1", "rooma", "left"})),
                    PolicyDecision::act(action(task, "move", {"rooma", "roomb"})), PolicyDecision::reset()});
  EpisodeLog log = run_episode(p, sim, 8, nullptr);
  EXPECT_EQ(log.transitions.size(), 2u);
  EXPECT_TRUE(log.reset_requested);
}

TEST_F(GripperFixture, NoActionEndsEpisode) {
  ScriptedPolicy p({});
  EpisodeLog log = run_episode(p, sim, 8, nullptr);
  EXPECT_TRUE(log.transitions.empty());
  EXPECT_TRUE(log.ended_early);
  EXPECT_THROW(run_episode(p, sim, 0, nullptr), std::invalid_argument);
}

TEST_F(GripperFixture, LogFormatIsStable) {
  ScriptedPolicy p({PolicyDecision::act(action(task, "pick", {"ball1", "rooma", "left"}))});
  EpisodeLog log = run_episode(p, sim, 8, nullptr);
  EXPECT_EQ(format_episode_log(log),
            "gripper-train-01\t0\t(pick ball1 rooma left)\t(carrying ball1 left)\t(at ball1 rooma)(free left)\n");
}

TEST_F(GripperFixture, IdenticalSeedsGiveIdenticalLogs) {
  UniformPolicy a(*ctx, 5), b(*ctx, 5);
  EXPECT_EQ(format_episode_log(run_episode(a, sim, 8, nullptr)), format_episode_log(run_episode(b, sim, 8, nullptr)));
}

TEST(RotateTask, SingleTaskAlwaysChosen) {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(rotate_task(1, rng), 0u);
  EXPECT_THROW(rotate_task(0, rng), std::invalid_argument);
}

TEST(RotateTask, UniformWithinThreeSigma) {
  Rng rng(2024);
  const int n = 10000;
  std::array<int, 4> counts{};
  for (int i = 0; i < n; ++i) ++counts[rotate_task(4, rng)];
  const double sigma = std::sqrt(n * 0.25 * 0.75);
  double chi2 = 0;
  for (int c : counts) {
    EXPECT_LT(std::abs(c - n * 0.25), 3 * sigma);
    chi2 += (c - n * 0.25) * (c - n * 0.25) / (n * 0.25);
  }
  EXPECT_LT(chi2, 16.27);  // chi-square, 3 dof, p = 0.001
}

TEST(RotateTask, SameSeedSameSequence) {
  Rng a(9), b(9);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(rotate_task(7, a), rotate_task(7, b));
}

}  // namespace
}  // namespace relearn
