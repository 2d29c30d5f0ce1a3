#pragma once

#include "finmark/pointproc.hpp"
#include "finmark/rational.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace finmark
{
    // The selection rule has two length scales. A configuration point is an
    // *anchor* when the open interval of length anchor_gap behind it is
    // point-free; sweeping left to right, the next trigger is the first
    // anchor at distance at least `lookback` from the previous trigger, and
    // each trigger x owns the globe [x+1, x+3]. Anchors inside a globe are
    // impossible (the trigger sits within 3 of every in-globe position and
    // anchor_gap > 3), and a candidate's anchor window never reaches back
    // into an earlier globe (lookback - anchor_gap > 3), which is what makes
    // the globe set a function of the configuration outside the globes.
    struct SelectionParams
    {
        Rational lookback = Rational(130);
        Rational anchor_gap = Rational(4);

        void validate() const
        {
            if (lookback < 60)
            {
                throw std::invalid_argument("SelectionParams: lookback must be at least 60");
            }
            if (anchor_gap <= 3)
            {
                throw std::invalid_argument("SelectionParams: anchor_gap must exceed the globe span 3");
            }
            if (anchor_gap + 3 >= lookback)
            {
                throw std::invalid_argument("SelectionParams: anchor_gap too close to lookback");
            }
        }
    };

    inline const Rational kGlobeOffset = Rational(1);
    inline const Rational kGlobeLength = Rational(2);

    struct Globe
    {
        Rational trigger;
        Rational lo;
        Rational hi;
        Rational center;
        bool special = false;
        std::optional<Rational> special_point;

        bool same_interval(const Globe &other) const
        {
            return trigger == other.trigger && lo == other.lo && hi == other.hi;
        }
    };

    struct GlobeSet
    {
        std::vector<Globe> globes;
        // Triggers at or right of this position are certified: they are the
        // same for every configuration agreeing with this one on the window.
        Rational determinacy_margin;
    };

    // Total on valid configurations; the left-boundary uncertainty is
    // resolved by running the trigger recursion from every admissible
    // boundary state and waiting for the branches to merge.
    GlobeSet find_globes(const PointConfiguration &config, const SelectionParams &params);

    struct IndexedSpecial
    {
        long index = 0;          // paper convention: index 0 has the largest right endpoint <= 0
        std::size_t globe_pos = 0;
        Rational trigger;
        Rational center;
        Rational special_point;
    };

    struct SpecialIndexing
    {
        std::vector<IndexedSpecial> specials;
        // False when no special globe has right endpoint <= 0; indices then
        // start at 1 at the first special globe right of the origin.
        bool anchored_at_origin = false;
    };

    SpecialIndexing special_globes(const GlobeSet &gs, const PointConfiguration &config);

    // Radius R such that any configuration agreeing with `config` on
    // (query.lo - R, query.hi] has exactly the listed globes intersecting
    // `query`. Throws NoGroundingGap when the window cannot certify one.
    Rational locality_radius(const PointConfiguration &config, const Window &query,
                             const SelectionParams &params);

    void write_globes_csv(std::ostream &out, const GlobeSet &gs);
}
