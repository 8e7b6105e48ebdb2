#pragma once

#include <json.hpp>

#include "hetform/merge.hpp"
#include "hetform/persistence.hpp"
#include "hetform/rigidity.hpp"
#include "hetform/sim.hpp"
#include "hetform/stability.hpp"

namespace hetform::report {

using Json = nlohmann::ordered_json;

Json point(const Vec2& v);
Json configuration(const Configuration& c);
Json rigidity(const RigidityReport& r, std::size_t agents, std::size_t edges);
Json dof(const DofLedger& d);
Json consistency(const ConsistencyVerdict& v, const TwoLayerGraph& g);
Json gain_bound(const GainBound& b);
Json criterion(const CriterionReport& c);
Json merge_plan(const MergePlan& p);
Json convergence(const ConvergenceReport& c, const Trajectory& t);

}  // namespace hetform::report
