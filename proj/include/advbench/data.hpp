#pragma once

#include <cstdint>
#include <vector>

#include "advbench/tensor.hpp"

namespace advbench {

enum class Task { Classification, Segmentation };

inline const char* task_name(Task t) {
    return t == Task::Classification ? "classification" : "segmentation";
}

struct Sample {
    Tensor image;  // [H,W,C], values in [0,1]
    LabelMap label;
};

struct Dataset {
    Task task = Task::Classification;
    int n_classes = 0;  // total, including background for segmentation
    std::vector<Sample> samples;
    std::vector<std::int64_t> groups;  // "patient" identity per sample
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> test_idx;
    std::uint64_t seed = 0;

    std::vector<Sample> split(const std::vector<std::size_t>& idx) const {
        std::vector<Sample> out;
        out.reserve(idx.size());
        for (std::size_t i : idx) out.push_back(samples[i]);
        return out;
    }
    std::vector<Sample> train_samples() const { return split(train_idx); }
    std::vector<Sample> test_samples() const { return split(test_idx); }
};

}  // namespace advbench
