#pragma once

// Benchmark fixture assembled directly from the lower-level modules.

#include "ira/ddmodel.hpp"
#include "ira/reach.hpp"
#include "ira/sysdata.hpp"

namespace fixture {

using namespace ira;

struct Bench {
  int Ns;
  sysdata::DiscreteSystem fine;
  sysdata::DiscreteSystem coarse;
  setcalc::Zonotope X0 = sysdata::benchmark_initial_set();
  setcalc::Zonotope U = sysdata::benchmark_input_set();
  sysdata::DataMatrices data;
  ddmodel::ModelSet fine_model;
  setcalc::Zonotope Zw_c;
  ddmodel::ModelSet coarse_model;

  explicit Bench(std::uint64_t seed = 1, int ns = 3)
      : Ns(ns),
        fine(sysdata::discretize(sysdata::benchmark_system(), 0.05)),
        coarse(sysdata::discretize(sysdata::benchmark_system(), 0.05 * ns)),
        data(sysdata::collect_data(fine, 150, X0.center(), {U, ns}, seed)),
        fine_model(ddmodel::build_model_set(data, fine.noise, ddmodel::Resolution::kFine, 0.05)),
        Zw_c(ddmodel::estimate_coarse_noise(ddmodel::extract_A_block(fine_model), fine.noise, ns, 4).noise),
        coarse_model(ddmodel::build_model_set(sysdata::subsample_coarse(data, ns), Zw_c, ddmodel::Resolution::kCoarse,
                                              0.05 * ns)) {}

  reach::ChainConfig config(int K) const {
    reach::ChainConfig cfg;
    cfg.K = K;
    cfg.Ns = Ns;
    cfg.input_set = U;
    return cfg;
  }
};

}  // namespace fixture
