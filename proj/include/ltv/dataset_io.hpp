#pragma once

#include <string>
#include <vector>

#include "ltv/records.hpp"

namespace ltv {

// A dataset file: the catalog and feature dimension from the header plus the
// sample records.
struct Dataset {
    PriceCatalog catalog;
    int feature_dim = 0;
    std::vector<Sample> samples;

    bool operator==(const Dataset&) const = default;
};

// Line-delimited text format, one sample per line after a versioned header.
// read_dataset(write_dataset(d)) == d field for field; parse errors report
// the line number and the offending field.
void write_dataset(const Dataset& dataset, const std::string& path);
Dataset read_dataset(const std::string& path);

struct TemporalSplit {
    std::vector<Sample> train;                   // day_index < train_days
    std::vector<std::vector<Sample>> rolling;    // rolling[d]: day train_days + d
};

// Partitions samples by day. The day horizon is inferred as max(day_index)+1;
// train_days must lie strictly inside it. Possibly-empty day buckets are kept
// so the rolling protocol sees every calendar day.
TemporalSplit split_temporal(const std::vector<Sample>& samples, int train_days);

}  // namespace ltv
