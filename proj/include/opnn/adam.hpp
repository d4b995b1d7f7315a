#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "opnn/params.hpp"

namespace opnn {

struct AdamConfig {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam with bias correction. First/second moment buffers are kept per
// parameter name; the step counter is shared and increases by one per step().
class Adam {
public:
    explicit Adam(AdamConfig config = {});

    // Applies one update to every parameter. Every parameter must track
    // gradients (UsageError otherwise); an all-zero gradient is a valid
    // "no signal" state and leaves the parameter unchanged at t=1.
    void step(ModelParams& params);

    std::uint64_t steps_taken() const { return t_; }
    const AdamConfig& config() const { return config_; }

private:
    struct Moments {
        std::vector<double> m;
        std::vector<double> v;
    };

    AdamConfig config_;
    std::uint64_t t_ = 0;
    std::map<std::string, Moments> moments_;
};

}  // namespace opnn
