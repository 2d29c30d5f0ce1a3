#pragma once

#include "finmark/borel.hpp"
#include "finmark/pointproc.hpp"
#include "finmark/selection.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace finmark
{
    // Which partition feeds the marking transform: the translation-equivariant
    // selection rule, or the integer-grid warm-up (special unit intervals,
    // equivariant under integer shifts only) used as a cross-check oracle.
    enum class MarkingMode
    {
        selection_rule,
        unit_grid,
    };

    // Audit record for one special interval processed by the transform.
    struct GlobeWitness
    {
        long index = 0; // paper indexing from special_globes / grid order
        Rational interval_lo;
        Rational interval_hi;
        Rational center;
        Rational original_point;
        Rational new_point;
        std::size_t n = 0; // 1 + number of non-special points in the preceding stretch
        Rational v;
        Rational g;
        std::vector<std::int32_t> marks; // extract order: rank 1 first, resident last
    };

    struct PsiResult
    {
        MarkedConfiguration output;
        Window core_region;
        std::vector<GlobeWitness> witness;
        GlobeSet globes; // empty list in unit_grid mode
    };

    // Per-special-interval rank table: rank 1 is the point closest to the
    // special interval, counting the points strictly between the previous
    // special interval and this one.
    struct RankTable
    {
        std::size_t n = 0;
        std::vector<std::size_t> ranked; // indices into config.points, rank 1 first
    };

    PsiResult psi_forward(const PointConfiguration &config, const MarkDistribution &dist,
                          const SelectionParams &params,
                          MarkingMode mode = MarkingMode::selection_rule);

    PointConfiguration psi_inverse(const MarkedConfiguration &marked, const MarkDistribution &dist,
                                   const SelectionParams &params,
                                   MarkingMode mode = MarkingMode::selection_rule);

    // Radius w such that any configuration agreeing with `config` on (-w, w)
    // produces the same output points and marks on (-1, 1).
    Rational coding_window(const PointConfiguration &config, const SelectionParams &params);

    // The fully marked part of a transform result: points inside core_region,
    // every one carrying a real mark.
    MarkedConfiguration core_slice(const PsiResult &result);

    void write_witness_json(std::ostream &out, const PsiResult &result, const MarkDistribution &dist);
}
