#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "emea/inference.hpp"
#include "emea/kg.hpp"

namespace emea {

// Full run description, parsed from JSON and echoed verbatim into the manifest.
struct RunConfig {
    std::filesystem::path kg1_path;
    std::filesystem::path kg2_path;
    // Either one links file plus a seed fraction (split in-tool) ...
    std::filesystem::path links_path;
    double seed_fraction = 0.05;
    int validation_count = 100;
    // ... or explicit split files.
    std::filesystem::path train_links_path;
    std::filesystem::path valid_links_path;
    std::filesystem::path test_links_path;

    std::filesystem::path similarity_dump;  // optional: drive the engine externally

    RuleSelect rules = RuleSelect::Paris;
    EncoderConfig encoder;
    NormalizerFitConfig normalizer;
    EmConfig em;
    std::filesystem::path out_dir;
    std::uint64_t rng_seed = 0;
};

RunConfig parse_run_config(const std::filesystem::path& path);

// Uniform split without replacement: |train| = round(fraction * n), validation
// capped at 10% for tiny link sets, remainder is the test set.
struct LinkSplit {
    LinkList train;
    LinkList valid;
    LinkList test;
};
LinkSplit split_links(const LinkList& links, double fraction, int validation_count,
                      std::uint64_t rng_seed);

struct RunArtifacts {
    std::filesystem::path manifest_path;
    EmRunState state;
};

// Executes the configured pipeline and writes manifest + artifacts to out_dir.
RunArtifacts execute_run(const RunConfig& config);

// CLI entry point shared by the emea binary and the in-process tests.
// Returns the process exit status (0 ok, 1 engine error, 2 usage error).
int dispatch(const std::vector<std::string>& args);

}  // namespace emea
