#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "advbench/data.hpp"
#include "advbench/rng.hpp"
#include "advbench/tensor.hpp"

namespace advbench {

/// Deterministic desk-scale dataset recipes. Classification images are
/// class-coded blob textures; segmentation images are nested shapes with
/// class-dependent intensities over a noisy background.
struct DatasetSpec {
    Task task = Task::Classification;
    std::size_t n_samples = 240;
    std::size_t image_size = 0;   // 0 = task default (16 cls, 32 seg)
    int n_classes = 0;            // 0 = task default (3 cls; 4 foreground seg)
    double noise_floor = 0.04;
    double train_fraction = 0.0;  // 0 = task default (0.5 cls, 0.8 seg)
    std::uint64_t seed = 1;

    std::size_t size() const { return image_size ? image_size : (task == Task::Classification ? 16 : 32); }
    int classes() const { return n_classes ? n_classes : (task == Task::Classification ? 3 : 4); }
    double split() const {
        return train_fraction > 0.0 ? train_fraction : (task == Task::Classification ? 0.5 : 0.8);
    }
    void validate() const {
        require(n_samples >= 4, "dataset spec: need at least 4 samples");
        require(noise_floor >= 0.0 && noise_floor < 0.5, "dataset spec: noise floor out of range");
        require(train_fraction >= 0.0 && train_fraction < 1.0, "dataset spec: bad split fraction");
        require(classes() >= 2, "dataset spec: need at least 2 classes");
    }
};

namespace detail {

// Stratified-by-group split: groups are shuffled within each stratum so class
// balance survives, and samples sharing a group id never straddle the split.
inline void split_by_groups(Dataset& ds, double train_fraction, Rng& rng,
                            const std::vector<int>& sample_stratum) {
    std::vector<std::int64_t> group_ids;
    std::vector<int> group_stratum;
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        if (std::find(group_ids.begin(), group_ids.end(), ds.groups[i]) == group_ids.end()) {
            group_ids.push_back(ds.groups[i]);
            group_stratum.push_back(sample_stratum[i]);
        }
    }
    std::vector<std::size_t> order(group_ids.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);

    // per-stratum round robin: the first train_fraction of each stratum trains
    std::vector<std::vector<std::size_t>> strata;
    for (std::size_t oi : order) {
        int s = group_stratum[oi];
        if (static_cast<std::size_t>(s) >= strata.size()) strata.resize(static_cast<std::size_t>(s) + 1);
        strata[static_cast<std::size_t>(s)].push_back(oi);
    }
    std::vector<char> group_in_train(group_ids.size(), 0);
    for (const auto& stratum : strata) {
        std::size_t n_train = static_cast<std::size_t>(
            std::lround(train_fraction * static_cast<double>(stratum.size())));
        for (std::size_t k = 0; k < stratum.size(); ++k)
            group_in_train[stratum[k]] = k < n_train;
    }
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        std::size_t gi = static_cast<std::size_t>(
            std::find(group_ids.begin(), group_ids.end(), ds.groups[i]) - group_ids.begin());
        (group_in_train[gi] ? ds.train_idx : ds.test_idx).push_back(i);
    }
}

}  // namespace detail

/// Class-coded blob textures: class k controls mean intensity, blob radius
/// and stripe frequency, so both pixel statistics and spatial structure carry
/// the label. Labels are balanced within +-1.
inline Dataset gen_classification(const DatasetSpec& spec) {
    require(spec.task == Task::Classification, "gen_classification: wrong task");
    spec.validate();
    const std::size_t S = spec.size();
    const int C = spec.classes();
    require(C <= 6, "gen_classification: at most 6 classes supported");

    Dataset ds;
    ds.task = Task::Classification;
    ds.n_classes = C;
    ds.seed = spec.seed;

    for (std::size_t i = 0; i < spec.n_samples; ++i) {
        Rng rng(derive_seed(spec.seed, 0xC1A5, i));
        int label = static_cast<int>(i % static_cast<std::size_t>(C));

        double mu = 0.30 + 0.20 * label + rng.uniform(-0.02, 0.02);
        double radius = (0.18 + 0.07 * label) * static_cast<double>(S) + rng.uniform(-0.5, 0.5);
        double stripes = 1.5 * label;  // class 0 has none
        double cx = 0.5 * static_cast<double>(S) + rng.uniform(-2.0, 2.0);
        double cy = 0.5 * static_cast<double>(S) + rng.uniform(-2.0, 2.0);

        Tensor img = Tensor::zeros({S, S, 1});
        for (std::size_t r = 0; r < S; ++r)
            for (std::size_t c = 0; c < S; ++c) {
                double v = 0.12 + rng.uniform(-spec.noise_floor, spec.noise_floor);
                double dr = static_cast<double>(r) - cy, dc = static_cast<double>(c) - cx;
                if (dr * dr + dc * dc <= radius * radius) {
                    v = mu + rng.uniform(-spec.noise_floor, spec.noise_floor);
                    if (stripes > 0.0)
                        v += 0.10 * std::sin(6.2831853071795865 * stripes *
                                             static_cast<double>(r + c) / static_cast<double>(S));
                }
                img.at3(r, c, 0) = std::clamp(v, 0.0, 1.0);
            }
        ds.samples.push_back({std::move(img), LabelMap::scalar(label)});
        ds.groups.push_back(static_cast<std::int64_t>(i));  // one "patient" per image
    }

    Rng split_rng(derive_seed(spec.seed, 0x5B117));
    std::vector<int> strata;
    for (const Sample& s : ds.samples) strata.push_back(s.label.label());
    detail::split_by_groups(ds, spec.split(), split_rng, strata);
    return ds;
}

/// Nested/adjacent shapes (disk, ring, rectangle, stripe) with
/// class-dependent intensities; four consecutive slices share a "volume"
/// layout and never straddle the train/test split.
inline Dataset gen_segmentation(const DatasetSpec& spec) {
    require(spec.task == Task::Segmentation, "gen_segmentation: wrong task");
    spec.validate();
    const std::size_t S = spec.size();
    const int FG = spec.classes();  // foreground classes; background is 0
    require(FG >= 2 && FG <= 4, "gen_segmentation: supports 2..4 foreground classes");
    const std::size_t slices_per_volume = 4;

    Dataset ds;
    ds.task = Task::Segmentation;
    ds.n_classes = FG + 1;
    ds.seed = spec.seed;

    for (std::size_t i = 0; i < spec.n_samples; ++i) {
        std::size_t volume = i / slices_per_volume;
        Rng vol_rng(derive_seed(spec.seed, 0x5E6, volume));
        Rng rng(derive_seed(spec.seed, 0x511CE, i));

        // volume-level layout, slice-level jitter
        double base_cx = 0.40 * static_cast<double>(S) + vol_rng.uniform(-2.0, 2.0);
        double base_cy = 0.42 * static_cast<double>(S) + vol_rng.uniform(-2.0, 2.0);
        double disk_r = 0.14 * static_cast<double>(S) + vol_rng.uniform(-1.0, 1.0);
        double ring_r = disk_r + 0.09 * static_cast<double>(S) + vol_rng.uniform(-0.5, 0.5);
        double ring_w = 0.05 * static_cast<double>(S) + vol_rng.uniform(0.0, 0.6);
        std::size_t rect_w = S / 4 + vol_rng.below(3);
        std::size_t rect_h = S / 5 + vol_rng.below(3);
        std::size_t stripe_col = S - S / 6 - vol_rng.below(3);
        std::size_t stripe_w = 2 + vol_rng.below(2);

        double cx = base_cx + rng.uniform(-1.0, 1.0);
        double cy = base_cy + rng.uniform(-1.0, 1.0);

        Tensor img = Tensor::zeros({S, S, 1});
        LabelMap mask({S, S}, std::vector<int>(S * S, 0));
        const double shade[5] = {0.15, 0.45, 0.65, 0.85, 0.95};

        for (std::size_t r = 0; r < S; ++r)
            for (std::size_t c = 0; c < S; ++c) {
                int cls = 0;
                double dr = static_cast<double>(r) - cy, dc = static_cast<double>(c) - cx;
                double d = std::sqrt(dr * dr + dc * dc);
                if (d <= disk_r) cls = 1;
                else if (FG >= 2 && d >= ring_r && d <= ring_r + ring_w) cls = 2;
                if (FG >= 3 && r < rect_h && c < rect_w) cls = 3;
                if (FG >= 4 && c >= stripe_col && c < stripe_col + stripe_w) cls = 4;
                mask.data[r * S + c] = cls;
                double v = shade[cls] + rng.uniform(-spec.noise_floor, spec.noise_floor);
                img.at3(r, c, 0) = std::clamp(v, 0.0, 1.0);
            }
        ds.samples.push_back({std::move(img), mask});
        ds.groups.push_back(static_cast<std::int64_t>(volume));
    }

    // segmentation split is unstratified: one stratum covers all volumes
    Rng split_rng(derive_seed(spec.seed, 0x5B117));
    detail::split_by_groups(ds, spec.split(), split_rng, std::vector<int>(ds.samples.size(), 0));
    return ds;
}

inline Dataset gen_dataset(const DatasetSpec& spec) {
    return spec.task == Task::Classification ? gen_classification(spec) : gen_segmentation(spec);
}

}  // namespace advbench
