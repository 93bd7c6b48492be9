#pragma once

#include <cstdint>
#include <string>

#include "ltv/evaluation.hpp"
#include "ltv/generator.hpp"
#include "ltv/labeling.hpp"
#include "ltv/model.hpp"

namespace ltv {

// One config file drives the whole pipeline. Sections: [run], [generator],
// [label], [model], [train], [eval], [paths]; '#' starts a comment. Every
// parse error reports file, line and field. The global seed fans out to the
// generator and, per model, to init and shuffling (see cli).
struct RunConfig {
    std::uint64_t seed = 42;
    int train_days = 100;

    GeneratorConfig generator;
    LabelConfig label;
    TrunkConfig trunk;   // embeddings must match the generator's categorical schema
    TrainConfig train;
    eval::EvalConfig eval;

    std::string dataset_path = "out/dataset.txt";
    std::string checkpoint_dir = "out";
    std::string report_dir = "out/reports";

    static RunConfig defaults();
    static RunConfig from_file(const std::string& path);

    // Propagates the global seed into every stochastic component.
    void apply_seed(std::uint64_t new_seed);
    void validate() const;
};

}  // namespace ltv
