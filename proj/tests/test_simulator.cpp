#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "hmarl/attack.hpp"
#include "hmarl/simulator.hpp"
#include "support.hpp"

using namespace hmarl;

namespace {

class FixedAttack final : public AttackPolicy {
 public:
  FixedAttack(std::vector<double> a, double budget) : a_(std::move(a)), budget_(budget) {}
  std::string name() const override { return "fixed"; }
  double budget() const override { return budget_; }
  Perturbation act(const RoadNetwork&, const TripTable&, const SimState&) override { return Perturbation(a_); }

 private:
  std::vector<double> a_;
  double budget_;
};

/// Direct evaluation of the volume-delay formula, written independently.
double bpr(double t, double b, double c, double p, double n) { return t + t * b * std::exp(p * std::log(n / c)); }

}  // namespace

TEST_SUITE("simulator") {
  TEST_CASE("travel time examples") {
    const EdgeSpec e{0, 0, 1, 2.0, 100.0, 0.15, 4.0};
    CHECK(edge_travel_time(e, 0.0) == 2.0);
    CHECK(edge_travel_time(e, 100.0) == doctest::Approx(2.0 * 1.15).epsilon(1e-15));
    CHECK(edge_travel_time(e, 200.0) == doctest::Approx(6.8).epsilon(1e-14));
  }

  TEST_CASE("travel time matches direct evaluation and is monotone") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> t(0.1, 20.0), b(0.0, 2.0), c(1.0, 1e4), p(0.0, 6.0), n(0.0, 3e4);
    for (int i = 0; i < 500; ++i) {
      const EdgeSpec e{0, 0, 1, t(rng), c(rng), b(rng), p(rng)};
      const double load = n(rng);
      const double got = edge_travel_time(e, load);
      CHECK(std::abs(got - bpr(e.free_flow_time, e.b, e.capacity, e.power, load)) <= 1e-12 * got);
      CHECK(edge_travel_time(e, load * 1.5 + 1.0) >= got);
    }
  }

  TEST_CASE("congested times sum the load on each edge") {
    const RoadNetwork g = testing::make_network(2, {{0, 1, 2.0, 100.0, 0.15, 4.0}});
    const TripTable trips{{0, 1, 50.0}, {0, 1, 150.0}};
    SimState s = SimState::initial(trips);
    CHECK(congested_times(g, s, trips) == std::vector<double>{2.0});
    s.locations[0] = OnEdge{0, 2};
    s.locations[1] = OnEdge{0, 3};
    CHECK(congested_times(g, s, trips)[0] == doctest::Approx(6.8).epsilon(1e-14));
    const TripTable one{{0, 1, 100.0}};
    SimState s1 = SimState::initial(one);
    s1.locations[0] = OnEdge{0, 1};
    CHECK(congested_times(g, s1, one)[0] == doctest::Approx(2.3).epsilon(1e-15));
  }

  TEST_CASE("observed times") {
    const std::vector<double> w{2.0, 3.0};
    CHECK(observed_times(w, Perturbation({1.0, 0.0})) == std::vector<double>{3.0, 3.0});
    CHECK(observed_times(w, Perturbation::zeros(2)) == w);
    CHECK_THROWS_AS(observed_times(w, Perturbation::zeros(3)), std::invalid_argument);
    CHECK_THROWS_AS(Perturbation({-1.0}), std::invalid_argument);
  }

  TEST_CASE("vehicles on edges count down regardless of the perturbation") {
    const RoadNetwork g = testing::make_network(2, {{0, 1}});
    const TripTable trips{{0, 1, 5.0}};
    SimState s = SimState::initial(trips);
    s.locations[0] = OnEdge{0, 3};
    const StepResult r = step(g, trips, s, Perturbation({7.0}));
    CHECK(r.state.locations[0] == VehicleLocation{OnEdge{0, 2}});
    CHECK(r.metrics.remaining == 5.0);
  }

  TEST_CASE("arrived trips are absorbing") {
    const RoadNetwork g = testing::make_network(2, {{0, 1}, {1, 0}});
    const TripTable trips{{0, 1, 5.0}};
    SimState s = SimState::initial(trips);
    s.locations[0] = AtNode{1};
    s.arrived[0] = 1;
    const StepResult r = step(g, trips, s, Perturbation::zeros(2));
    CHECK(r.state.locations[0] == VehicleLocation{AtNode{1}});
    CHECK(r.metrics.remaining == 0.0);
  }

  TEST_CASE("routing uses observed times, traversal uses actual times") {
    const RoadNetwork g = testing::diamond();
    const TripTable trips{{0, 3, 10.0}};
    const SimState s = SimState::initial(trips);
    const StepResult r = step(g, trips, s, Perturbation({3.0, 0.0, 0.0, 0.0}));
    // Observed top 5 vs bottom 4: the vehicle goes bottom, traversal from actual w = 2.
    CHECK(r.state.locations[0] == VehicleLocation{OnEdge{2, 2}});
    CHECK(r.state.last_paths[0] == std::vector<EdgeId>{2, 3});
    CHECK(r.metrics.observed_times == std::vector<double>{4.0, 1.0, 2.0, 2.0});
    const StepResult plain = step(g, trips, s, Perturbation::zeros(4));
    CHECK(plain.state.locations[0] == VehicleLocation{OnEdge{0, 1}});
  }

  TEST_CASE("traversal rounds half away from zero with a floor of one") {
    const TripTable trips{{0, 1, 1.0}};
    for (auto [t, expect] : std::vector<std::pair<double, std::uint32_t>>{{0.2, 1}, {0.5, 1}, {1.49, 1}, {2.5, 3}, {3.4, 3}}) {
      const RoadNetwork g = testing::make_network(2, {{0, 1, t}});
      const StepResult r = step(g, trips, SimState::initial(trips), Perturbation::zeros(1));
      CHECK(r.state.locations[0] == VehicleLocation{OnEdge{0, expect}});
    }
  }

  TEST_CASE("single edge hand trace") {
    const RoadNetwork g = testing::make_network(2, {{0, 1, 3.0}});
    const double s = 12.0, gamma = 0.9;
    const TripTable trips{{0, 1, s}};
    NullAttack none;
    EpisodeOptions opt;
    opt.gamma = gamma;
    const EpisodeResult r = run_episode(g, trips, none, opt);
    CHECK(r.remaining_per_step == std::vector<double>{s, s, s, 0.0});
    CHECK(r.discounted_objective == doctest::Approx(s * (1 + gamma + gamma * gamma)).epsilon(1e-15));
    CHECK(r.all_arrived);
    CHECK(r.steps_run == 4);
  }

  TEST_CASE("empty workload") {
    const RoadNetwork g = testing::make_network(2, {{0, 1}});
    NullAttack none;
    const EpisodeResult r = run_episode(g, {}, none, {});
    CHECK(r.discounted_objective == 0.0);
    CHECK(r.steps_run == 0);
    CHECK(r.all_arrived);
  }

  TEST_CASE("unreachable destinations freeze the vehicle") {
    const RoadNetwork g = testing::make_network(3, {{0, 1}, {1, 0}});
    const TripTable trips{{0, 2, 4.0}, {0, 1, 1.0}};
    NullAttack none;
    EpisodeOptions opt;
    opt.horizon = 5;
    const EpisodeResult r = run_episode(g, trips, none, opt);
    CHECK_FALSE(r.all_arrived);
    CHECK(r.steps_run == 5);
    CHECK(r.unreachable_events == 5);
    CHECK(r.remaining_per_step.back() == 4.0);
  }

  TEST_CASE("budget contract is enforced per step") {
    const RoadNetwork g = testing::diamond();
    const TripTable trips{{0, 3, 10.0}};
    FixedAttack over({3.0, 0.0, 0.0, 0.0}, 2.0);
    CHECK_THROWS_AS(run_episode(g, trips, over, {}), BudgetViolation);
    FixedAttack exact({1.0, 1.0, 0.0, 0.0}, 2.0);
    const auto before = budget_checks_performed();
    const EpisodeResult r = run_episode(g, trips, exact, {});
    CHECK(budget_checks_performed() - before == r.steps_run);
    CHECK_THROWS_AS(check_budget(Perturbation({1.0}), 1, 0.0, BudgetMode::Zero), BudgetViolation);
    CHECK_NOTHROW(check_budget(Perturbation({0.5}), 1, 1.0, BudgetMode::AtMost));
    CHECK_THROWS_AS(check_budget(Perturbation({0.5}), 2, 0.5, BudgetMode::Exact), BudgetViolation);
  }

  TEST_CASE("chosen first edges start a shortest observed route") {
    std::mt19937_64 rng(21);
    for (int rep = 0; rep < 30; ++rep) {
      auto [g0, w0] = testing::random_graph(rng, 6 + rep % 20, 0.3);
      std::vector<EdgeSpec> specs = g0.edges();
      for (EdgeSpec& e : specs) {
        e.free_flow_time = w0[e.id];
        e.capacity = 20.0;
        e.b = 0.15;
        e.power = 4.0;
      }
      const RoadNetwork g(g0.node_count(), specs);
      std::uniform_int_distribution<NodeId> node(0, static_cast<NodeId>(g.node_count() - 1));
      std::uniform_real_distribution<double> size(1.0, 30.0), pert(0.0, 3.0);
      TripTable trips;
      for (int i = 0; i < 25; ++i) {
        const NodeId o = node(rng), d = node(rng);
        if (o != d && testing::bellman_ford(g, w0, o)[d] != testing::kInf) trips.push_back({o, d, size(rng)});
      }
      SimState s = SimState::initial(trips);
      for (int t = 0; t < 6 && !s.all_arrived(); ++t) {
        std::vector<double> av(g.edge_count());
        for (double& x : av) x = pert(rng);
        const Perturbation a(av);
        const StepResult r = step(g, trips, s, a);
        for (std::size_t i = 0; i < trips.size(); ++i) {
          const auto* at = std::get_if<AtNode>(&s.locations[i]);
          if (s.arrived[i] || !at || at->node == trips[i].destination) continue;
          const auto& on = std::get<OnEdge>(r.state.locations[i]);
          const std::vector<double>& wh = r.metrics.observed_times;
          const double best = testing::bellman_ford(g, wh, at->node)[trips[i].destination];
          const double via = wh[on.edge] + testing::bellman_ford(g, wh, g.edge(on.edge).to)[trips[i].destination];
          CHECK(std::abs(via - best) <= 1e-9 * best);
          CHECK(on.remaining == std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::round(r.metrics.actual_times[on.edge]))));
        }
        s = r.state;
      }
    }
  }

  TEST_CASE("Sioux Falls episodes") {
    const RoadNetwork g = testing::sioux_falls();
    const TripTable trips = testing::sioux_falls_trips();
    NullAttack none;
    const EpisodeResult base = run_episode(g, trips, none, {});
    CHECK(base.all_arrived);
    CHECK(base.steps_run <= 200);
    CHECK(base.remaining_per_step.back() == 0.0);
    CHECK(std::is_sorted(base.remaining_per_step.rbegin(), base.remaining_per_step.rend()));
    CHECK(std::abs(discounted_sum(base.remaining_per_step, 0.99) - base.discounted_objective) <= 1e-9 * base.discounted_objective);
    CHECK(run_episode(g, trips, none, {}) == base);
    GreedyAttack zero(0.0);
    CHECK(run_episode(g, trips, zero, {}).discounted_objective == base.discounted_objective);
  }

  TEST_CASE("per-step CSV") {
    EpisodeResult r;
    r.gamma = 0.5;
    r.remaining_per_step = {4.0, 2.0, 0.0};
    std::ostringstream out;
    write_episode_csv(out, r);
    CHECK(out.str() == "step,remaining,objective_contribution\n1,4,4\n2,2,1\n3,0,0\n");
  }
}
