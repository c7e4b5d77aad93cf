// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "irsense/config.hpp"
#include "irsense/errors.hpp"
#include "irsense/harness.hpp"

namespace fixture {

using namespace irsense;

/// One realization of the default two-target scene. `snr_db` = +inf is noiseless.
inline TrialRealization default_trial(double snr_db = kInf, std::uint64_t seed = 1,
                                      SimulationConfig cfg = {})
{
    cfg.finalize();
    const ExperimentSpec spec = make_spec(Preset::MseVsSnr, cfg, 1, seed);
    const SweepPoint point = sweep_point(spec, snr_db);
    Rng channel_rng = derive_rng(seed, 0, 0);
    Rng noise_rng = derive_rng(seed, 0, 1);
    return realize_trial(point, channel_rng, noise_rng);
}

template <typename F>
ErrorCode error_of(F&& f)
{
    try {
        f();
    } catch (const SenseError& e) {
        return e.code();
    }
    return static_cast<ErrorCode>(-1);
}

} // namespace fixture
