#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>

#include "relearn/explorer.hpp"
#include "test_support.hpp"

namespace relearn {
namespace {

using testing::action;
using testing::atom;
using testing::load_context;
using testing::load_domain;

const Operator& gt_operator(const Domain& d, const std::string& action_name) {
  for (const auto& op : d.gt_operators) {
    if (d.actions[op.action].name == action_name) return op;
  }
  throw std::out_of_range(action_name);
}

LiftedLiteral lit(const Domain& d, const std::string& pred, std::initializer_list<int> vars, bool positive = true) {
  LiftedLiteral l;
  l.atom.predicate = *d.find_predicate(pred);
  for (int v : vars) l.atom.vars[l.atom.arity++] = static_cast<VarId>(v);
  l.positive = positive;
  return l;
}

// Learned operator for the action, looked up by effect signature.
const Operator* learned_for(const std::vector<Operator>& ops, const Domain& d, const std::string& action_name) {
  for (const auto& op : ops) {
    if (d.actions[op.action].name == action_name && match_operator(op, d.gt_operators)) return &op;
  }
  return nullptr;
}

bool is_type2(const std::vector<Operator>& ops, const Transition& t) {
  return predict(ops, *t.task, t.state, t.action).next != t.next_state;
}

std::shared_ptr<const TaskContext> inline_context(const std::shared_ptr<const Domain>& d, const std::string& text) {
  return std::make_shared<const TaskContext>(std::make_shared<const Task>(parse_problem(text, d)));
}

// ---------------------------------------------------------------------------
// Random actions

TEST(RandomPolicy, SingleActionIsAlwaysChosen) {
  auto d = load_domain("gripper/domain.pddl");
  auto ctx = inline_context(d, R"((define (problem one) (:domain gripper)
      (:objects rooma - room) (:init (at-robby rooma)) (:goal (and (at-robby rooma)))))");
  ASSERT_EQ(ctx->actions().size(), 1u);
  Rng rng(4);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(random_policy(*ctx, rng), ctx->actions()[0]);
}

TEST(RandomPolicy, SameSeedSameSequence) {
  auto d = load_domain("blocks/domain.pddl");
  auto ctx = load_context(d, "blocks/test/test-04.pddl");
  Rng a(11), b(11);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(random_policy(*ctx, a), random_policy(*ctx, b));
}

TEST(RandomPolicy, DrawsAreUniform) {
  auto d = load_domain("blocks/domain.pddl");
  auto ctx = load_context(d, "blocks/test/test-04.pddl");
  const std::size_t n = ctx->actions().size();
  const std::size_t samples = 200 * n;
  std::map<GroundAction, std::size_t> counts;
  Rng rng(5);
  for (std::size_t i = 0; i < samples; ++i) ++counts[random_policy(*ctx, rng)];
  EXPECT_EQ(counts.size(), n);
  const double expected = static_cast<double>(samples) / static_cast<double>(n);
  double chi2 = 0;
  for (const auto& [a, c] : counts) chi2 += (c - expected) * (c - expected) / expected;
  // Mean n-1, standard deviation sqrt(2(n-1)); five sigma.
  const double dof = static_cast<double>(n - 1);
  EXPECT_LT(chi2, dof + 5 * std::sqrt(2 * dof));
}

// ---------------------------------------------------------------------------
// Goal babbling

// All renamings of the goal variables, written without canonical ordering.
std::vector<GoalActionPair> renamings(const GoalActionPair& p) {
  std::vector<GoalActionPair> out;
  std::vector<VarId> perm(p.num_goal_variables);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    GoalActionPair r = p;
    for (std::size_t v = 0; v < p.num_goal_variables; ++v) r.variable_types[perm[v]] = p.variable_types[v];
    for (auto& l : r.goal) {
      for (std::size_t i = 0; i < l.atom.arity; ++i) l.atom.vars[i] = perm[l.atom.vars[i]];
    }
    for (auto& v : r.action_args) {
      if (v < p.num_goal_variables) v = perm[v];
    }
    std::reverse(r.goal.begin(), r.goal.end());
    out.push_back(std::move(r));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

TEST(GoalActionPairs, RenamingsShareOneCanonicalKey) {
  auto d = load_domain("gripper/domain.pddl");
  std::vector<GoalActionPair> pairs = enumerate_goal_action_pairs(*d);
  ASSERT_FALSE(pairs.empty());
  std::set<GoalActionPair> all(pairs.begin(), pairs.end());
  ASSERT_EQ(all.size(), pairs.size());
  std::size_t two_literal = 0;
  for (const auto& p : pairs) {
    EXPECT_LE(p.goal.size(), 2u);
    EXPECT_EQ(canonical_pair(p), p);
    if (p.goal.size() == 2) ++two_literal;
    for (const auto& r : renamings(p)) {
      EXPECT_EQ(canonical_pair(r), p);
      // A renaming that is itself in canonical form must be p; otherwise
      // two enumerated pairs would be variants of each other.
      GoalActionPair sorted = r;
      std::sort(sorted.goal.begin(), sorted.goal.end());
      if (sorted != p) EXPECT_EQ(all.count(sorted), 0u);
    }
  }
  EXPECT_GT(two_literal, 0u);
}

TEST(GoalActionPairs, ActionArgumentsAreDistinctAndTyped) {
  auto d = load_domain("gripper/domain.pddl");
  for (const auto& p : enumerate_goal_action_pairs(*d)) {
    const ActionSchema& schema = d->actions[p.action];
    ASSERT_EQ(p.action_args.size(), schema.arity());
    std::set<VarId> distinct(p.action_args.begin(), p.action_args.end());
    EXPECT_EQ(distinct.size(), p.action_args.size());
    for (std::size_t i = 0; i < schema.arity(); ++i) {
      EXPECT_TRUE(d->is_subtype(p.variable_types[p.action_args[i]], schema.parameter_types[i]));
    }
    for (const auto& l : p.goal) {
      const PredicateSchema& ps = d->predicates[l.atom.predicate];
      for (std::size_t i = 0; i < l.atom.arity; ++i) {
        EXPECT_LT(l.atom.vars[i], p.num_goal_variables);
        EXPECT_TRUE(d->is_subtype(p.variable_types[l.atom.vars[i]], ps.parameter_types[i]));
      }
    }
  }
}

TEST(NoveltyStore, NeverRepeatsAndExhausts) {
  auto d = load_domain("gripper/domain.pddl");
  std::vector<GoalActionPair> pairs = enumerate_goal_action_pairs(*d, 1);
  NoveltyStore store(pairs);
  Rng rng(3);
  auto first = glib_sample(store, rng);
  ASSERT_TRUE(first);
  EXPECT_EQ(store.sampled(), 1u);
  EXPECT_TRUE(store.was_sampled(*first));
  std::set<GoalActionPair> seen{canonical_pair(*first)};
  while (auto p = glib_sample(store, rng)) EXPECT_TRUE(seen.insert(canonical_pair(*p)).second);
  EXPECT_EQ(seen.size(), pairs.size());
  EXPECT_FALSE(glib_sample(store, rng));
}

TEST(GlibPolicy, NoOperatorsMeansRandomActions) {
  auto d = load_domain("gripper/domain.pddl");
  auto ctx = load_context(d, "gripper/train/train-01.pddl");
  Rng rng(1);
  TraceLog trace;
  GlibPolicy policy(*d, rng, &trace);
  std::size_t before = policy.store().remaining();
  EpisodeLog log = run_episode(policy, Simulator(ctx), 5, nullptr);
  EXPECT_EQ(log.steps_used, 5u);
  EXPECT_EQ(policy.store().remaining(), before);
  EXPECT_EQ(std::count(trace.text().begin(), trace.text().end(), '\n'), 5);
  EXPECT_NE(trace.text().find("\trandom\t"), std::string::npos);
}

GoalActionPair make_pair(const Domain& d, std::vector<LiftedLiteral> goal, std::vector<std::string> types,
                         std::size_t goal_vars, const std::string& act, std::vector<VarId> args) {
  GoalActionPair p;
  p.goal = std::move(goal);
  for (const auto& t : types) p.variable_types.push_back(*d.find_type(t));
  p.num_goal_variables = goal_vars;
  p.action = *d.find_action(act);
  p.action_args = std::move(args);
  return canonical_pair(p);
}

TEST(GlibPolicy, SatisfiedGoalRunsFollowActionImmediately) {
  auto d = load_domain("gripper/domain.pddl");
  auto ctx = load_context(d, "gripper/train/train-01.pddl");
  // Goal at-robby(?r), then move from ?r to another room.
  GoalActionPair p = make_pair(*d, {lit(*d, "at-robby", {0})}, {"room", "room"}, 1, "move", {0, 1});
  int satisfied = 0;
  for (std::uint64_t seed = 0; seed < 16; ++seed) {
    Rng rng(seed);
    TraceLog trace;
    GlibPolicy policy(NoveltyStore({p}), rng, &trace);
    policy.set_operators(d->gt_operators);
    policy.begin_episode(*ctx, ctx->task().init);
    PolicyDecision first = policy.next(ctx->task().init);
    ASSERT_EQ(first.kind, PolicyDecision::Kind::kAct);
    if (trace.text().find("\tbabble\t-\t(at-robby rooma)\t0\t") == std::string::npos) continue;
    ++satisfied;
    EXPECT_EQ(first.action, action(ctx->task(), "move", {"rooma", "roomb"}));
    EXPECT_NE(trace.text().find("\tfollow\t(move rooma roomb)"), std::string::npos) << trace.text();
  }
  EXPECT_GT(satisfied, 0);
}

TEST(GlibPolicy, TenFailuresEmitOneRandomAction) {
  auto d = load_domain("gripper/domain.pddl");
  auto ctx = load_context(d, "gripper/train/train-01.pddl");
  // A ball cannot be in a room and in a gripper at once.
  const PredicateId at = *d->find_predicate("at"), carrying = *d->find_predicate("carrying");
  std::vector<GoalActionPair> impossible;
  for (const auto& p : enumerate_goal_action_pairs(*d)) {
    if (p.goal.size() != 2) continue;
    const LiftedLiteral *in_room = nullptr, *held = nullptr;
    for (const auto& l : p.goal) {
      if (l.atom.predicate == at) in_room = &l;
      if (l.atom.predicate == carrying) held = &l;
    }
    if (in_room && held && in_room->atom.vars[0] == held->atom.vars[0]) impossible.push_back(p);
  }
  ASSERT_GE(impossible.size(), 11u);
  Rng rng(6);
  TraceLog trace;
  GlibOptions options;
  options.babble_budget.max_expansions = 200;
  GlibPolicy policy(NoveltyStore(impossible), rng, &trace, options);
  policy.set_operators(d->gt_operators);
  policy.begin_episode(*ctx, ctx->task().init);
  const std::size_t before = policy.store().remaining();
  PolicyDecision decision = policy.next(ctx->task().init);
  ASSERT_EQ(decision.kind, PolicyDecision::Kind::kAct);
  EXPECT_EQ(before - policy.store().remaining(), 10u);
  EXPECT_EQ(trace.text(), "0\tfallback\t" + to_string(ctx->task(), decision.action) + "\t-\t-\t-\t-\n");
  EXPECT_FALSE(policy.exhausted());
}

TEST(GlibPolicy, ExhaustedStoreFallsBackForGood) {
  auto d = load_domain("gripper/domain.pddl");
  auto ctx = load_context(d, "gripper/train/train-01.pddl");
  Rng rng(8);
  TraceLog trace;
  GlibPolicy policy(NoveltyStore({}), rng, &trace);
  policy.set_operators(d->gt_operators);
  EpisodeLog log = run_episode(policy, Simulator(ctx), 4, nullptr);
  EXPECT_EQ(log.steps_used, 4u);
  EXPECT_TRUE(policy.exhausted());
  EXPECT_EQ(trace.text().find("fallback"), trace.text().rfind("fallback"));
}

// A pick that forgot free(?g) plans two picks into one gripper; the second
// pick is a real no-op, the pair is abandoned and the follow action dropped.
TEST(GlibPolicy, DivergenceAbortsThePair) {
  auto d = load_domain("gripper/domain.pddl");
  auto ctx = load_context(d, "gripper/train/train-01.pddl");
  std::vector<Operator> weak = d->gt_operators;
  for (auto& op : weak) {
    if (d->actions[op.action].name != "pick") continue;
    std::erase_if(op.preconditions, [&](const LiftedLiteral& l) { return l.atom.predicate == *d->find_predicate("free"); });
  }
  GoalActionPair p = make_pair(*d, {lit(*d, "carrying", {0, 1}), lit(*d, "carrying", {2, 1})},
                               {"ball", "gripper", "ball", "room", "room"}, 3, "move", {3, 4});
  Rng rng(9);
  TraceLog trace;
  GlibPolicy policy(NoveltyStore({p}), rng, &trace);
  policy.set_operators(weak);
  EpisodeLog log = run_episode(policy, Simulator(ctx), 4, nullptr);
  const std::string& text = trace.text();
  ASSERT_NE(text.find("babble"), std::string::npos) << text;
  std::size_t div = text.find("\tdiverged\t");
  ASSERT_NE(div, std::string::npos) << text;
  EXPECT_NE(text.find("\t2\t1\t-\n", div), std::string::npos) << text;
  EXPECT_EQ(text.find("follow"), std::string::npos) << text;
  EXPECT_TRUE(log.transitions[1].is_noop());
  EXPECT_NE(text.find("2\texhausted\t"), std::string::npos) << text;
}

// ---------------------------------------------------------------------------
// Oracle-BFS

std::vector<std::uint32_t> brute_mismatches(const TaskContext& ctx, const GroundModel& learned, const PackedState& s) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t a = 0; a < ctx.actions().size(); ++a) {
    if (learned.predict(s, a) != ctx.gt_model().predict(s, a)) out.push_back(a);
  }
  return out;
}

std::vector<Operator> without(const Domain& d, const std::string& action_name) {
  std::vector<Operator> ops;
  for (const auto& op : d.gt_operators) {
    if (d.actions[op.action].name != action_name) ops.push_back(op);
  }
  return ops;
}

TEST(OracleBfs, MismatchSetMatchesBruteForce) {
  auto d = load_domain("blocks/domain.pddl");
  auto ctx = load_context(d, "blocks/train/train-03.pddl");
  std::vector<Operator> partial = without(*d, "stack");
  // Also a model whose unstack ignores clear(?x).
  for (auto& op : partial) {
    if (d->actions[op.action].name == "unstack") std::erase_if(op.preconditions, [&](const LiftedLiteral& l) {
        return l.atom.predicate == *d->find_predicate("clear");
      });
  }
  GroundModel learned = ctx->compile(partial);
  std::size_t nonempty = 0;
  for (const PackedState& s : testing::reachable_states(*ctx, 4)) {
    auto fast = mismatching_actions(learned, ctx->gt_model(), s);
    EXPECT_EQ(fast, brute_mismatches(*ctx, learned, s));
    nonempty += !fast.empty();
  }
  EXPECT_GT(nonempty, 0u);
}

TEST(OracleBfs, CorrectModelMeansRandomActions) {
  auto d = load_domain("gripper/domain.pddl");
  auto ctx = load_context(d, "gripper/test/test-03.pddl");
  Rng rng(10);
  for (const PackedState& s : testing::reachable_states(*ctx, 2)) {
    EXPECT_EQ(oracle_bfs_policy(*ctx, ctx->gt_model(), s, rng).stage, BfsStage::kRandom);
  }
}

TEST(OracleBfs, CurrentMismatchHasPriority) {
  auto d = load_domain("fixtures/chain/domain.pddl");
  auto ctx = load_context(d, "fixtures/chain/here.pddl");
  GroundModel learned = ctx->compile(without(*d, "ring"));
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    OracleBfsChoice c = oracle_bfs_policy(*ctx, learned, ctx->pack(ctx->task().init), rng);
    EXPECT_EQ(c.stage, BfsStage::kCurrentMismatch);
    EXPECT_EQ(ctx->actions()[c.action], action(ctx->task(), "ring", {"c3"}));
  }
}

TEST(OracleBfs, MismatchTwoStepsAwayIsFound) {
  auto d = load_domain("fixtures/chain/domain.pddl");
  auto ctx = load_context(d, "fixtures/chain/near.pddl");
  GroundModel learned = ctx->compile(without(*d, "ring"));
  Rng rng(2);
  OracleBfsChoice c = oracle_bfs_policy(*ctx, learned, ctx->pack(ctx->task().init), rng);
  EXPECT_EQ(c.stage, BfsStage::kSearch);
  EXPECT_EQ(ctx->actions()[c.action], action(ctx->task(), "walk", {"c0", "c1"}));
}

TEST(OracleBfs, MismatchThreeStepsAwayIsBeyondTheDepthLimit) {
  auto d = load_domain("fixtures/chain/domain.pddl");
  auto ctx = load_context(d, "fixtures/chain/far.pddl");
  GroundModel learned = ctx->compile(without(*d, "ring"));
  Rng rng(3);
  for (int i = 0; i < 10; ++i) {
    EXPECT_EQ(oracle_bfs_policy(*ctx, learned, ctx->pack(ctx->task().init), rng).stage, BfsStage::kRandom);
  }
  OracleBfsOptions deeper;
  deeper.max_depth = 3;
  EXPECT_EQ(oracle_bfs_policy(*ctx, learned, ctx->pack(ctx->task().init), rng, deeper).stage, BfsStage::kSearch);
}

TEST(OracleBfs, StagePriorityOnRandomStates) {
  auto d = load_domain("blocks/domain.pddl");
  auto ctx = load_context(d, "blocks/train/train-03.pddl");
  GroundModel learned = ctx->compile(without(*d, "put-down"));
  Rng rng(12);
  for (const PackedState& s : testing::reachable_states(*ctx, 3)) {
    auto here = brute_mismatches(*ctx, learned, s);
    OracleBfsChoice c = oracle_bfs_policy(*ctx, learned, s, rng);
    if (!here.empty()) {
      EXPECT_EQ(c.stage, BfsStage::kCurrentMismatch);
      EXPECT_TRUE(std::binary_search(here.begin(), here.end(), c.action));
    } else {
      EXPECT_NE(c.stage, BfsStage::kCurrentMismatch);
    }
  }
}

// ---------------------------------------------------------------------------
// Demonstrations

void expect_demo_bijection(const std::string& domain_file, const std::vector<std::string>& tasks) {
  auto d = load_domain(domain_file);
  std::vector<std::shared_ptr<const TaskContext>> training;
  for (const auto& t : tasks) training.push_back(load_context(d, t));
  Rng rng(1);
  DemoSet demos = generate_demos(training, SearchBudget{}, rng);
  ASSERT_EQ(demos.transitions.size(), d->gt_operators.size());
  std::vector<Operator> learned = learn_operators(demos.transitions);
  ASSERT_EQ(learned.size(), d->gt_operators.size());
  std::set<std::size_t> matched;
  for (const auto& op : learned) {
    auto m = match_operator(op, d->gt_operators);
    ASSERT_TRUE(m.has_value());
    matched.insert(*m);
  }
  EXPECT_EQ(matched.size(), d->gt_operators.size());
}

TEST(Demos, GripperNeedsThreeTransitions) {
  expect_demo_bijection("gripper/domain.pddl", {"gripper/train/train-01.pddl", "gripper/train/train-02.pddl"});
}

TEST(Demos, BlocksCoversEveryOperator) {
  expect_demo_bijection("blocks/domain.pddl", {"blocks/train/train-01.pddl", "blocks/train/train-03.pddl"});
}

TEST(Demos, UnreachableOperatorIsNamed) {
  auto d = load_domain("fixtures/chain/domain.pddl");
  auto ctx = inline_context(d, R"((define (problem silent) (:domain chain)
      (:objects c0 c1 - cell) (:init (at c0) (next c0 c1)) (:goal (and (at c1)))))");
  std::vector<std::shared_ptr<const TaskContext>> training{ctx};
  Rng rng(1);
  try {
    generate_demos(training, SearchBudget{}, rng);
    FAIL() << "expected ModelError";
  } catch (const ModelError& e) {
    EXPECT_NE(std::string(e.what()).find("ring"), std::string::npos);
  }
}

// ---------------------------------------------------------------------------
// Precondition comparison and dissonant goals

TEST(PreconditionDiff, IdenticalOperatorsHaveNoDissonance) {
  auto d = load_domain("blocks/domain.pddl");
  for (const auto& op : d->gt_operators) EXPECT_EQ(precondition_diff(op, op).dissonance(), 0u);
}

TEST(PreconditionDiff, ExtraLiteralIsStronger) {
  auto d = load_domain("fixtures/painted/domain.pddl");
  auto ctx = load_context(d, "fixtures/painted/task.pddl");
  std::vector<std::shared_ptr<const TaskContext>> training{ctx};
  Rng rng(1);
  std::vector<Operator> learned = learn_operators(generate_demos(training, SearchBudget{}, rng).transitions);
  const Operator* pick = learned_for(learned, *d, "pick");
  ASSERT_NE(pick, nullptr);
  PreconditionDiff diff = precondition_diff(*pick, gt_operator(*d, "pick"));
  ASSERT_EQ(diff.stronger.size(), 1u);
  EXPECT_TRUE(diff.weaker.empty());
  EXPECT_EQ(diff.stronger[0], lit(*d, "painted", {0}));
}

TEST(PreconditionDiff, MixedCaseCountsBothSides) {
  auto d = load_domain("fixtures/painted/domain.pddl");
  const Operator& gt = gt_operator(*d, "pick");
  Operator learned = gt;
  std::erase_if(learned.preconditions,
                [&](const LiftedLiteral& l) { return l.atom.predicate == *d->find_predicate("free"); });
  learned.preconditions.push_back(lit(*d, "painted", {0}));
  learned.preconditions.push_back(lit(*d, "carrying", {0, 2}, false));
  learned.normalize();
  PreconditionDiff diff = precondition_diff(learned, gt);
  EXPECT_EQ(diff.dissonance(), 3u);
  EXPECT_EQ(diff.stronger.size(), 2u);
  ASSERT_EQ(diff.weaker.size(), 1u);
  EXPECT_EQ(diff.weaker[0], lit(*d, "free", {2}));
}

TEST(PreconditionDiff, DifferentEffectsAreRejected) {
  auto d = load_domain("gripper/domain.pddl");
  EXPECT_THROW(precondition_diff(gt_operator(*d, "pick"), gt_operator(*d, "drop")), ModelError);
  EXPECT_FALSE(match_operator(gt_operator(*d, "pick"), without(*d, "pick")).has_value());
}

TEST(DissonantGoals, SingleStrongerLiteralTopGoal) {
  auto d = load_domain("fixtures/painted/domain.pddl");
  auto ctx = load_context(d, "fixtures/painted/task.pddl");
  const Operator& gt = gt_operator(*d, "pick");
  Operator learned = gt;
  learned.preconditions.push_back(lit(*d, "painted", {0}));
  learned.normalize();
  PreconditionDiff diff = precondition_diff(learned, gt);
  Rng rng(4);
  auto goals = dissonant_goals(diff, gt, learned, *ctx, rng);
  ASSERT_FALSE(goals.empty());
  // 2 balls x 2 rooms x 2 grippers, one subset each.
  EXPECT_EQ(goals.size(), 8u);
  for (const auto& g : goals) {
    EXPECT_TRUE(g.stronger_family);
    EXPECT_EQ(g.violated, 1u);
    std::vector<GroundLiteral> expected;
    for (const auto& l : canonical_learning_form(gt).preconditions) {
      Atom a;
      a.predicate = l.atom.predicate;
      a.arity = l.atom.arity;
      for (std::size_t i = 0; i < a.arity; ++i) a.args[i] = g.binding[l.atom.vars[i]];
      expected.push_back({a, l.positive});
    }
    Atom painted;
    painted.predicate = *d->find_predicate("painted");
    painted.arity = 1;
    painted.args[0] = g.binding[0];
    expected.push_back({painted, false});
    std::sort(expected.begin(), expected.end());
    EXPECT_EQ(g.literals, expected);
  }
}

TEST(DissonantGoals, MoreViolationsRankFirst) {
  auto d = load_domain("fixtures/painted/domain.pddl");
  auto ctx = load_context(d, "fixtures/painted/task.pddl");
  const Operator& gt = gt_operator(*d, "pick");
  Operator learned = gt;
  std::erase_if(learned.preconditions, [&](const LiftedLiteral& l) {
    return l.atom.predicate == *d->find_predicate("free") || l.atom.predicate == *d->find_predicate("at-robby");
  });
  PreconditionDiff diff = precondition_diff(learned, gt);
  ASSERT_EQ(diff.weaker.size(), 2u);
  Rng rng(5);
  auto goals = dissonant_goals(diff, gt, learned, *ctx, rng);
  ASSERT_FALSE(goals.empty());
  EXPECT_EQ(goals.front().violated, 2u);
  EXPECT_TRUE(std::is_sorted(goals.begin(), goals.end(),
                             [](const DissonantGoal& a, const DissonantGoal& b) { return a.violated > b.violated; }));
  EXPECT_EQ(std::count_if(goals.begin(), goals.end(), [](const DissonantGoal& g) { return g.violated == 2; }), 8);
  // Attempted goals are filtered out.
  std::set<std::vector<GroundLiteral>> done{goals.front().literals};
  auto rest = dissonant_goals(diff, gt, learned, *ctx, rng, done);
  EXPECT_EQ(rest.size(), goals.size() - 1);
}

// ---------------------------------------------------------------------------
// Precondition targeting end to end

struct TargetingRun {
  std::vector<std::size_t> dissonance;  // after each relearn
  std::vector<bool> type2;              // per episode: last transition mispredicted
  bool converged = false;
  std::vector<Operator> final_ops;
};

TargetingRun run_targeting(const std::string& domain_file, const std::string& task_file, std::uint64_t seed,
                           std::size_t episodes) {
  auto d = load_domain(domain_file);
  auto ctx = load_context(d, task_file);
  std::vector<std::shared_ptr<const TaskContext>> training{ctx};
  Rng rng(seed);
  std::vector<Transition> dataset = generate_demos(training, SearchBudget{}, rng).transitions;
  TraceLog trace;
  PrecondTargetingPolicy policy(d->gt_operators, rng, &trace);
  Simulator sim(ctx);
  TargetingRun run;
  for (std::size_t e = 0; e < episodes; ++e) {
    std::vector<Operator> ops = learn_operators(dataset);
    policy.set_operators(ops);
    run.dissonance.push_back(policy.dissonance());
    EpisodeLog log = run_episode(policy, sim, 20, &dataset);
    if (log.converged) {
      run.converged = true;
      run.final_ops = ops;
      break;
    }
    run.type2.push_back(!log.transitions.empty() && is_type2(ops, log.transitions.back()));
  }
  return run;
}

void expect_converges_monotonically(const std::string& domain_file, const std::string& task_file) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    TargetingRun run = run_targeting(domain_file, task_file, seed, 30);
    ASSERT_TRUE(run.converged) << "seed " << seed;
    ASSERT_GE(run.dissonance.front(), 1u);
    EXPECT_EQ(run.dissonance.back(), 0u);
    for (std::size_t i = 0; i + 1 < run.dissonance.size(); ++i) {
      EXPECT_LE(run.dissonance[i + 1], run.dissonance[i]) << "seed " << seed << " cycle " << i;
      if (run.type2[i]) EXPECT_LT(run.dissonance[i + 1], run.dissonance[i]) << "seed " << seed << " cycle " << i;
    }
    auto d = load_domain(domain_file);
    auto ctx = load_context(d, task_file);
    GroundModel learned = ctx->compile(run.final_ops);
    for (const PackedState& s : testing::reachable_states(*ctx, 6)) {
      EXPECT_TRUE(mismatching_actions(learned, ctx->gt_model(), s).empty());
    }
  }
}

TEST(PrecondTargeting, StrongerCaseElicitsEffectsAndRelaxes) {
  auto d = load_domain("fixtures/painted/domain.pddl");
  auto ctx = load_context(d, "fixtures/painted/task.pddl");
  std::vector<std::shared_ptr<const TaskContext>> training{ctx};
  Rng rng(7);
  std::vector<Transition> dataset = generate_demos(training, SearchBudget{}, rng).transitions;
  std::vector<Operator> ops = learn_operators(dataset);
  TraceLog trace;
  PrecondTargetingPolicy policy(d->gt_operators, rng, &trace);
  policy.set_operators(ops);
  ASSERT_EQ(policy.dissonance(), 2u);  // painted(?b) on pick and on drop
  EpisodeLog log = run_episode(policy, Simulator(ctx), 20, &dataset);
  ASSERT_TRUE(log.reset_requested);
  const Transition& target = log.transitions.back();
  // Observed effects where the learned model predicted a no-op.
  EXPECT_FALSE(target.is_noop());
  EXPECT_TRUE(predict(ops, *target.task, target.state, target.action).next == target.state);
  std::vector<Operator> relearned = learn_operators(dataset);
  EXPECT_EQ(total_dissonance(relearned, d->gt_operators), 1u);
}

TEST(PrecondTargeting, WeakerCaseElicitsNoOpAndStrengthens) {
  auto d = load_domain("fixtures/wet/domain.pddl");
  auto ctx = load_context(d, "fixtures/wet/task.pddl");
  std::vector<std::shared_ptr<const TaskContext>> training{ctx};
  Rng rng(8);
  std::vector<Transition> dataset = generate_demos(training, SearchBudget{}, rng).transitions;
  std::vector<Operator> ops = learn_operators(dataset);
  const Operator* pick = learned_for(ops, *d, "pick");
  ASSERT_NE(pick, nullptr);
  PreconditionDiff diff = precondition_diff(*pick, gt_operator(*d, "pick"));
  ASSERT_EQ(diff.weaker, std::vector<LiftedLiteral>{lit(*d, "wet", {0}, false)});
  TraceLog trace;
  PrecondTargetingPolicy policy(d->gt_operators, rng, &trace);
  policy.set_operators(ops);
  EpisodeLog log = run_episode(policy, Simulator(ctx), 20, &dataset);
  ASSERT_TRUE(log.reset_requested);
  const Transition& target = log.transitions.back();
  EXPECT_TRUE(target.is_noop());
  EXPECT_TRUE(is_type2(ops, target));
  std::vector<Operator> relearned = learn_operators(dataset);
  const Operator* fixed = learned_for(relearned, *d, "pick");
  ASSERT_NE(fixed, nullptr);
  EXPECT_EQ(precondition_diff(*fixed, gt_operator(*d, "pick")).dissonance(), 0u);
}

TEST(PrecondTargeting, DissonanceNeverIncreasesAndReachesZero) {
  expect_converges_monotonically("fixtures/painted/domain.pddl", "fixtures/painted/task.pddl");
  expect_converges_monotonically("fixtures/wet/domain.pddl", "fixtures/wet/task.pddl");
}

TEST(PrecondTargeting, ZeroDissonanceSignalsConvergence) {
  auto d = load_domain("gripper/domain.pddl");
  auto ctx = load_context(d, "gripper/train/train-01.pddl");
  Rng rng(1);
  TraceLog trace;
  PrecondTargetingPolicy policy(d->gt_operators, rng, &trace);
  policy.set_operators(d->gt_operators);
  EXPECT_EQ(policy.dissonance(), 0u);
  EpisodeLog log = run_episode(policy, Simulator(ctx), 10, nullptr);
  EXPECT_TRUE(log.converged);
  EXPECT_EQ(log.steps_used, 0u);
  EXPECT_NE(trace.text().find("converged"), std::string::npos);
}

TEST(TraceLog, RecordsAreTabSeparatedWithPlaceholders) {
  TraceLog trace;
  trace.set_step(7);
  trace.record({"babble", "", "(at-robby rooma)", 3});
  trace.advance();
  trace.record({"diverged", "(pick b r g)", "", 2, 1, 4});
  EXPECT_EQ(trace.text(), "7\tbabble\t-\t(at-robby rooma)\t3\t-\t-\n8\tdiverged\t(pick b r g)\t-\t2\t1\t4\n");
}

}  // namespace
}  // namespace relearn
