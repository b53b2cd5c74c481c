#include <doctest.h>

#include <set>

#include "shopsched/genome.hpp"
#include "shopsched/rng.hpp"
#include "test_support.hpp"

using namespace shopsched;
using namespace shopsched::testing;

namespace {

ProblemInstance flexible_instance() {
  // Two jobs x two tasks, two stations, two workers everywhere: enough
  // alternatives that crossover and mutation always have room to act.
  ProblemInstance inst;
  for (int k = 0; k < 2; ++k) {
    Station st;
    st.id = k;
    st.slots = 1;
    st.requires_setup = true;
    inst.stations.push_back(st);
  }
  inst.workers.push_back({0});
  inst.workers.push_back({1});
  for (int j = 0; j < 2; ++j) {
    Job job;
    job.id = j;
    for (int t = 0; t < 2; ++t) {
      TaskSpec spec;
      for (int k = 0; k < 2; ++k) {
        TaskAlternative alt;
        alt.station = k;
        alt.setup_workers[0] = 2.0 + k;
        alt.setup_workers[1] = 3.0 + k;
        alt.processing_workers[0] = 5.0 + t;
        alt.processing_workers[1] = 6.0 + t;
        spec.alternatives.push_back(alt);
        spec.automation[k] = 0.5;
      }
      job.tasks.push_back(spec);
    }
    inst.jobs.push_back(job);
  }
  return inst;
}

}  // namespace

TEST_CASE("dispatch rule names round trip") {
  for (DispatchRule rule : {DispatchRule::Spt, DispatchRule::Lpt,
                            DispatchRule::Mtwr, DispatchRule::Str,
                            DispatchRule::Fifo}) {
    const auto back = dispatch_rule_from_string(to_string(rule));
    REQUIRE(back.has_value());
    CHECK(*back == rule);
  }
  CHECK_FALSE(dispatch_rule_from_string("nope").has_value());
}

TEST_CASE("balanced genome is structurally valid") {
  const ProblemInstance inst = flexible_instance();
  const Genome genome = balanced_genome(inst, DispatchRule::Str);
  CHECK(validate_genome(genome, inst).empty());
  CHECK(genome.allocation.size() == 4);
  CHECK(genome.dispatching.size() == 2);
  for (const DispatchGene& gene : genome.dispatching) {
    CHECK(gene.rule == DispatchRule::Str);
  }
}

TEST_CASE("population init is valid and deterministic") {
  const ProblemInstance inst = flexible_instance();
  const auto pop1 = init_population(inst, 12, 42);
  const auto pop2 = init_population(inst, 12, 42);
  const auto pop3 = init_population(inst, 12, 43);
  REQUIRE(pop1.size() == 12);
  for (const Genome& g : pop1) CHECK(validate_genome(g, inst).empty());

  auto fingerprint = [](const std::vector<Genome>& pop) {
    std::string s;
    for (const Genome& g : pop) {
      for (const AllocationGene& a : g.allocation) {
        s += std::to_string(a.task.job) + "." + std::to_string(a.task.task) +
             ":" + std::to_string(a.station) + "/" +
             std::to_string(a.setup_worker) + "/" +
             std::to_string(a.processing_worker) + ";";
      }
      for (const DispatchGene& d : g.dispatching) {
        s += std::string(to_string(d.rule)) + ";";
      }
    }
    return s;
  };
  CHECK(fingerprint(pop1) == fingerprint(pop2));
  CHECK(fingerprint(pop1) != fingerprint(pop3));
}

TEST_CASE("masked crossover traces gene inheritance") {
  const ProblemInstance inst = flexible_instance();
  Genome a = balanced_genome(inst, DispatchRule::Spt);
  Genome b = balanced_genome(inst, DispatchRule::Lpt);
  // Make the parents distinguishable everywhere.
  for (AllocationGene& gene : a.allocation) {
    gene.station = 0;
    gene.setup_worker = 0;
    gene.processing_worker = 0;
  }
  for (AllocationGene& gene : b.allocation) {
    gene.station = 1;
    gene.setup_worker = 1;
    gene.processing_worker = 1;
  }

  const std::vector<char> mask = {1, 0, 0, 1};
  const Genome child = jox_crossover_masked(a, b, mask);
  REQUIRE(child.allocation.size() == 4);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const int expect = mask[i] ? 0 : 1;
    CHECK(child.allocation[i].station == expect);
    CHECK(child.allocation[i].setup_worker == expect);
    CHECK(child.allocation[i].processing_worker == expect);
    CHECK(child.allocation[i].task == a.allocation[i].task);
  }
  // Rule subgenome comes from the first parent.
  for (const DispatchGene& gene : child.dispatching) {
    CHECK(gene.rule == DispatchRule::Spt);
  }
  CHECK(validate_genome(child, inst).empty());
}

TEST_CASE("random crossover inherits a strict mixed subset") {
  const ProblemInstance inst = flexible_instance();
  Genome a = balanced_genome(inst, DispatchRule::Spt);
  Genome b = balanced_genome(inst, DispatchRule::Lpt);
  for (AllocationGene& gene : a.allocation) gene.station = 0;
  for (AllocationGene& gene : b.allocation) gene.station = 1;

  Rng rng(7);
  bool saw_from_a = false, saw_from_b = false;
  for (int trial = 0; trial < 20; ++trial) {
    const Genome child = jox_crossover(a, b, rng);
    CHECK(validate_genome(child, inst).empty());
    for (const AllocationGene& gene : child.allocation) {
      if (gene.station == 0) saw_from_a = true;
      if (gene.station == 1) saw_from_b = true;
    }
  }
  CHECK(saw_from_a);
  CHECK(saw_from_b);
}

TEST_CASE("mutation reports the move it made") {
  const ProblemInstance inst = flexible_instance();
  const Genome base = balanced_genome(inst, DispatchRule::Str);
  Rng rng(11);

  bool saw_resource = false, saw_rule = false;
  for (int trial = 0; trial < 60; ++trial) {
    MutationMove move;
    const Genome mutated = mutate(base, inst, rng, &move);
    CHECK(validate_genome(mutated, inst).empty());
    REQUIRE(move.kind != MutationMove::Kind::None);
    if (move.kind == MutationMove::Kind::Resource) {
      saw_resource = true;
      const AllocationGene* before = base.find(move.task);
      const AllocationGene* after = mutated.find(move.task);
      REQUIRE(before != nullptr);
      REQUIRE(after != nullptr);
      CHECK(after->station == move.station);
      CHECK(after->setup_worker == move.setup_worker);
      CHECK(after->processing_worker == move.processing_worker);
      const bool changed = before->station != after->station ||
                           before->setup_worker != after->setup_worker ||
                           before->processing_worker != after->processing_worker;
      CHECK(changed);
    } else {
      saw_rule = true;
      CHECK(mutated.rule_for(move.rule_station) == move.rule);
      CHECK(base.rule_for(move.rule_station) != move.rule);
    }
  }
  CHECK(saw_resource);
  CHECK(saw_rule);
}

TEST_CASE("mutation on a rigid genome falls back to rule flips") {
  // Single station, single worker: no resource alternatives exist.
  const ProblemInstance inst = single_task_instance();
  const Genome base = balanced_genome(inst, DispatchRule::Fifo);
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    MutationMove move;
    const Genome mutated = mutate(base, inst, rng, &move);
    CHECK(validate_genome(mutated, inst).empty());
    CHECK(move.kind == MutationMove::Kind::Rule);
  }
}

TEST_CASE("genome validation flags broken structures") {
  const ProblemInstance inst = flexible_instance();
  Genome genome = balanced_genome(inst, DispatchRule::Str);

  SUBCASE("missing gene") {
    genome.allocation.pop_back();
    CHECK_FALSE(validate_genome(genome, inst).empty());
  }
  SUBCASE("station outside alternatives") {
    genome.allocation[0].station = 9;
    CHECK_FALSE(validate_genome(genome, inst).empty());
  }
  SUBCASE("worker outside pool") {
    genome.allocation[0].setup_worker = 9;
    CHECK_FALSE(validate_genome(genome, inst).empty());
  }
  SUBCASE("wrong topology group") {
    genome.allocation[0].topology_group += 1;
    CHECK_FALSE(validate_genome(genome, inst).empty());
  }
}
