#include "finmark/selection.hpp"

#include "finmark/errors.hpp"

#include <algorithm>
#include <limits>
#include <ostream>
#include <set>

namespace finmark
{
    namespace
    {
        constexpr std::size_t kNoBranch = std::numeric_limits<std::size_t>::max();

        struct SelectionScan
        {
            const std::vector<Rational> &pts;
            std::vector<std::size_t> anchors; // indices of certainly-anchored points
            bool first_point_censored = false;

            SelectionScan(const PointConfiguration &config, const SelectionParams &params)
                : pts(config.points)
            {
                const Rational &g = params.anchor_gap;
                for (std::size_t j = 0; j < pts.size(); ++j)
                {
                    const Rational gap = j == 0 ? pts[0] - config.window.lo : pts[j] - pts[j - 1];
                    if (gap >= g)
                    {
                        anchors.push_back(j);
                    }
                    else if (j == 0)
                    {
                        // The gap behind the first point leaves the window, so
                        // anchor status depends on unseen data.
                        first_point_censored = true;
                    }
                }
            }

            // First certainly-anchored point at or after position x.
            std::size_t next_anchor(const Rational &x) const
            {
                auto it = std::lower_bound(anchors.begin(), anchors.end(), x,
                                           [&](std::size_t j, const Rational &v) { return pts[j] < v; });
                return it == anchors.end() ? kNoBranch : *it;
            }
        };
    }

    GlobeSet find_globes(const PointConfiguration &config, const SelectionParams &params)
    {
        params.validate();
        const Rational &L = params.lookback;
        const Rational &lo = config.window.lo;
        const Rational &hi = config.window.hi;
        const SelectionScan scan(config, params);
        const auto &pts = config.points;

        // Admissible boundary states: the unseen data left of the window may
        // hold a trigger anywhere at or before window.lo, so the first
        // in-window trigger is first_anchor(e) for some blocking end
        // e in [lo, lo + L].
        std::set<std::size_t> branches;
        for (std::size_t j : scan.anchors)
        {
            if (pts[j] > lo + L)
            {
                break;
            }
            branches.insert(j);
        }
        if (scan.first_point_censored && !pts.empty() && pts[0] <= lo + L)
        {
            branches.insert(0);
        }
        branches.insert(scan.next_anchor(lo + L));

        // Advance the lowest branch until all admissible histories agree.
        while (branches.size() > 1)
        {
            const std::size_t j = *branches.begin();
            branches.erase(branches.begin());
            branches.insert(j == kNoBranch ? kNoBranch : scan.next_anchor(pts[j] + L));
        }
        const std::size_t tau = *branches.begin();

        GlobeSet gs{{}, hi};
        if (tau == kNoBranch)
        {
            // No certified trigger in this window; nothing is reported.
            return gs;
        }
        gs.determinacy_margin = pts[tau];

        for (std::size_t t = tau; t != kNoBranch; t = scan.next_anchor(pts[t] + L))
        {
            const Rational glo = pts[t] + kGlobeOffset;
            const Rational ghi = glo + kGlobeLength;
            if (ghi > hi)
            {
                break; // globe leaves the window; content cannot be classified
            }
            Globe globe{pts[t], glo, ghi, glo + kGlobeLength / 2, false, std::nullopt};
            const auto first = std::lower_bound(pts.begin(), pts.end(), glo);
            const auto last = std::upper_bound(pts.begin(), pts.end(), ghi);
            if (last - first == 1)
            {
                globe.special = true;
                globe.special_point = *first;
            }
            gs.globes.push_back(std::move(globe));
        }
        return gs;
    }

    SpecialIndexing special_globes(const GlobeSet &gs, const PointConfiguration &config)
    {
        static_cast<void>(config);
        SpecialIndexing result;
        std::vector<std::size_t> positions;
        for (std::size_t k = 0; k < gs.globes.size(); ++k)
        {
            if (gs.globes[k].special)
            {
                positions.push_back(k);
            }
        }
        if (positions.empty())
        {
            return result;
        }
        // gamma_0 is the special globe with the largest non-positive right
        // endpoint; when none qualifies, indexing starts at 1 on the first
        // special globe right of the origin.
        long zero_pos = -1;
        for (std::size_t i = 0; i < positions.size(); ++i)
        {
            if (gs.globes[positions[i]].hi <= 0)
            {
                zero_pos = static_cast<long>(i);
            }
        }
        result.anchored_at_origin = zero_pos >= 0;
        const long base = zero_pos >= 0 ? zero_pos : -1; // index = i - base
        for (std::size_t i = 0; i < positions.size(); ++i)
        {
            const Globe &g = gs.globes[positions[i]];
            result.specials.push_back(IndexedSpecial{static_cast<long>(i) - base, positions[i],
                                                     g.trigger, g.center, *g.special_point});
        }
        return result;
    }

    Rational locality_radius(const PointConfiguration &config, const Window &query,
                             const SelectionParams &params)
    {
        params.validate();
        if (!config.window.contains(query))
        {
            throw std::invalid_argument("locality_radius: query not contained in window");
        }
        const Rational target = query.lo - kGlobeOffset - kGlobeLength; // triggers down to here matter
        Rational radius = params.lookback + params.anchor_gap + 3;
        while (true)
        {
            Rational b = query.lo - radius;
            bool clamped = false;
            if (b <= config.window.lo)
            {
                b = config.window.lo;
                clamped = true;
            }
            PointConfiguration sub{Window(b, config.window.hi), {}};
            for (const Rational &p : config.points)
            {
                if (p >= b)
                {
                    sub.points.push_back(p);
                }
            }
            const GlobeSet gs = find_globes(sub, params);
            if (!gs.globes.empty() && gs.determinacy_margin <= target)
            {
                return query.lo - b;
            }
            if (clamped)
            {
                throw NoGroundingGap("locality_radius: window cannot certify the selection state for the query");
            }
            radius *= 2;
        }
    }

    void write_globes_csv(std::ostream &out, const GlobeSet &gs)
    {
        out << "# determinacy_margin " << to_string(gs.determinacy_margin) << '\n';
        out << "trigger,lo,hi,center,special,special_point\n";
        for (const Globe &g : gs.globes)
        {
            out << to_string(g.trigger) << ',' << to_string(g.lo) << ',' << to_string(g.hi) << ','
                << to_string(g.center) << ',' << (g.special ? "1" : "0") << ',';
            if (g.special_point)
            {
                out << to_string(*g.special_point);
            }
            out << '\n';
        }
    }
}
