#include "finmark/marking.hpp"

#include "finmark/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <ostream>

namespace finmark
{
    namespace
    {
        struct SpecialInterval
        {
            Rational lo;
            Rational hi;
            Rational point; // the unique resident (forward direction)
            long index = 0;
        };

        // The marking map sends the resident at s to lo + |interval| * g with
        // g in [0,1), so transformed residents sit strictly left of the
        // interval's right endpoint. A resident exactly at the right endpoint
        // of a closed globe would need v = 1; both directions exclude such
        // specials by this same visible rule, which keeps the round trip
        // exact (the transform never produces the excluded position).
        std::vector<SpecialInterval> selection_specials(const PointConfiguration &config,
                                                        const SelectionParams &params, GlobeSet &gs_out)
        {
            gs_out = find_globes(config, params);
            const SpecialIndexing indexing = special_globes(gs_out, config);
            std::vector<SpecialInterval> specials;
            specials.reserve(indexing.specials.size());
            for (const IndexedSpecial &s : indexing.specials)
            {
                const Globe &g = gs_out.globes[s.globe_pos];
                if (*g.special_point == g.hi)
                {
                    continue;
                }
                specials.push_back(SpecialInterval{g.lo, g.hi, *g.special_point, s.index});
            }
            return specials;
        }

        // Unit cells [m, m+1) fully inside the window that hold exactly one
        // point. Cell membership is half-open, so a cell's right endpoint
        // belongs to the next cell.
        std::vector<SpecialInterval> grid_specials(const PointConfiguration &config)
        {
            std::vector<SpecialInterval> specials;
            const Integer first_cell = ceil_of(config.window.lo);
            const Integer last_cell = floor_of(config.window.hi); // cells [m, m+1) with m+1 <= hi
            const auto &pts = config.points;
            std::size_t i = 0;
            while (i < pts.size() && pts[i] < Rational(first_cell, 1))
            {
                ++i;
            }
            for (Integer m = first_cell; m + 1 <= last_cell; ++m)
            {
                const Rational cell_lo(m, 1);
                const Rational cell_hi(m + 1, 1);
                std::size_t count = 0;
                Rational resident;
                while (i < pts.size() && pts[i] < cell_hi)
                {
                    resident = pts[i];
                    ++count;
                    ++i;
                }
                if (count == 1)
                {
                    specials.push_back(SpecialInterval{cell_lo, cell_hi, resident, 0});
                }
            }
            // Paper indexing: index 0 for the special interval with the
            // largest non-positive right endpoint.
            long zero_pos = -1;
            for (std::size_t k = 0; k < specials.size(); ++k)
            {
                if (specials[k].hi <= 0)
                {
                    zero_pos = static_cast<long>(k);
                }
            }
            const long base = zero_pos >= 0 ? zero_pos : -1;
            for (std::size_t k = 0; k < specials.size(); ++k)
            {
                specials[k].index = static_cast<long>(k) - base;
            }
            return specials;
        }

        std::vector<SpecialInterval> specials_for(const PointConfiguration &config,
                                                  const MarkDistribution &dist,
                                                  const SelectionParams &params, MarkingMode mode,
                                                  GlobeSet &gs_out)
        {
            static_cast<void>(dist);
            if (mode == MarkingMode::selection_rule)
            {
                return selection_specials(config, params, gs_out);
            }
            gs_out = GlobeSet{{}, config.window.lo};
            return grid_specials(config);
        }

        // Points strictly between the previous special interval and this one
        // (grid mode includes the previous cell's right endpoint), ranked so
        // that rank 1 is nearest to the current special interval.
        RankTable rank_between(const PointConfiguration &config, const SpecialInterval &prev,
                               const SpecialInterval &cur, MarkingMode mode)
        {
            const auto &pts = config.points;
            const bool closed_left = mode == MarkingMode::unit_grid;
            auto first = closed_left ? std::lower_bound(pts.begin(), pts.end(), prev.hi)
                                     : std::upper_bound(pts.begin(), pts.end(), prev.hi);
            auto last = std::lower_bound(pts.begin(), pts.end(), cur.lo);
            RankTable table;
            for (auto it = last; it != first;)
            {
                --it;
                table.ranked.push_back(static_cast<std::size_t>(it - pts.begin()));
            }
            table.n = table.ranked.size() + 1;
            return table;
        }
    }

    PsiResult psi_forward(const PointConfiguration &config, const MarkDistribution &dist,
                          const SelectionParams &params, MarkingMode mode)
    {
        config.validate();
        GlobeSet gs;
        const std::vector<SpecialInterval> specials = specials_for(config, dist, params, mode, gs);
        if (specials.size() < 2)
        {
            throw InsufficientCore("psi_forward: fewer than 2 special intervals in the certified region");
        }

        PsiResult result{MarkedConfiguration{config, std::vector<std::int32_t>(config.points.size(), kNoMark),
                                             origin_index_of(config.points)},
                         Window(specials.front().hi, specials.back().hi), {}, gs};

        const auto &pts = config.points;
        for (std::size_t i = 1; i < specials.size(); ++i)
        {
            const SpecialInterval &prev = specials[i - 1];
            const SpecialInterval &cur = specials[i];
            const RankTable table = rank_between(config, prev, cur, mode);
            const Rational len = cur.hi - cur.lo;
            const UnitValue v{Rational((cur.point - cur.lo) / len)};
            auto [g, marks] = extract(v, table.n, dist);

            const std::size_t resident =
                static_cast<std::size_t>(std::lower_bound(pts.begin(), pts.end(), cur.point) - pts.begin());
            const Rational new_point = cur.lo + len * g.value;
            result.output.base.points[resident] = new_point;
            result.output.marks[resident] = marks.back();
            for (std::size_t k = 0; k < table.ranked.size(); ++k)
            {
                result.output.marks[table.ranked[k]] = marks[k];
            }

            GlobeWitness w;
            w.index = cur.index;
            w.interval_lo = cur.lo;
            w.interval_hi = cur.hi;
            w.center = (cur.lo + cur.hi) / 2;
            w.original_point = cur.point;
            w.new_point = new_point;
            w.n = table.n;
            w.v = v.value;
            w.g = g.value;
            w.marks = std::move(marks);
            result.witness.push_back(std::move(w));
        }
        result.output.origin_index = origin_index_of(result.output.base.points);
        return result;
    }

    PointConfiguration psi_inverse(const MarkedConfiguration &marked, const MarkDistribution &dist,
                                   const SelectionParams &params, MarkingMode mode)
    {
        marked.base.validate();
        if (marked.marks.size() != marked.base.points.size())
        {
            throw std::invalid_argument("psi_inverse: marks and points differ in length");
        }
        GlobeSet gs;
        const std::vector<SpecialInterval> specials = specials_for(marked.base, dist, params, mode, gs);
        if (specials.size() < 2)
        {
            throw InsufficientCore("psi_inverse: fewer than 2 special intervals in the certified region");
        }

        PointConfiguration restored = marked.base;
        const auto &pts = marked.base.points;
        for (std::size_t i = 1; i < specials.size(); ++i)
        {
            const SpecialInterval &prev = specials[i - 1];
            const SpecialInterval &cur = specials[i];
            const RankTable table = rank_between(marked.base, prev, cur, mode);
            const Rational len = cur.hi - cur.lo;
            const Rational g_value = (cur.point - cur.lo) / len;

            std::vector<std::int32_t> marks;
            marks.reserve(table.n);
            const std::size_t resident =
                static_cast<std::size_t>(std::lower_bound(pts.begin(), pts.end(), cur.point) - pts.begin());
            for (std::size_t k = 0; k < table.ranked.size(); ++k)
            {
                marks.push_back(marked.marks[table.ranked[k]]);
            }
            marks.push_back(marked.marks[resident]);
            for (const std::int32_t m : marks)
            {
                if (m < 0 || static_cast<std::size_t>(m) >= dist.size())
                {
                    throw AlphabetMismatch("psi_inverse: point in the core region carries no valid mark");
                }
            }

            const UnitValue v = inject(UnitValue{Rational(g_value)}, marks, dist);
            restored.points[resident] = cur.lo + len * v.value;
        }
        return restored;
    }

    Rational coding_window(const PointConfiguration &config, const SelectionParams &params)
    {
        const GlobeSet gs = find_globes(config, params);
        const SpecialIndexing indexing = special_globes(gs, config);
        if (!indexing.anchored_at_origin)
        {
            throw InsufficientCore("coding_window: no special globe with right endpoint <= 0");
        }
        const IndexedSpecial *before = nullptr; // gamma_{-1}
        const IndexedSpecial *at = nullptr;     // gamma_0
        const IndexedSpecial *after = nullptr;  // gamma_1
        for (const IndexedSpecial &s : indexing.specials)
        {
            if (s.index == -1)
            {
                before = &s;
            }
            if (s.index == 0)
            {
                at = &s;
            }
            if (s.index == 1)
            {
                after = &s;
            }
        }
        if (before == nullptr || at == nullptr || after == nullptr)
        {
            throw InsufficientCore("coding_window: need special globes gamma_{-1}, gamma_0, gamma_1 in window");
        }

        // Everything on (-1,1) is determined by gamma'_{-1} u gamma_0 u
        // gamma'_0 u gamma_1 plus enough left context to certify the triggers
        // from gamma_{-1} on.
        const Rational trigger_needed = before->trigger;
        Rational radius = params.lookback + params.anchor_gap + 3;
        Rational left_boundary;
        while (true)
        {
            Rational b = trigger_needed - radius;
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
            const GlobeSet sub_gs = find_globes(sub, params);
            if (!sub_gs.globes.empty() && sub_gs.determinacy_margin <= trigger_needed)
            {
                left_boundary = b;
                break;
            }
            if (clamped)
            {
                throw NoGroundingGap("coding_window: window cannot certify gamma_{-1}");
            }
            radius *= 2;
        }

        const Rational right_needed = gs.globes[after->globe_pos].hi;
        Rational w = std::max<Rational>(-left_boundary, right_needed) + 1;
        if (w < 1)
        {
            w = 1;
        }
        return w;
    }

    MarkedConfiguration core_slice(const PsiResult &result)
    {
        MarkedConfiguration slice{PointConfiguration{result.core_region, {}}, {}, std::nullopt};
        const auto &pts = result.output.base.points;
        for (std::size_t i = 0; i < pts.size(); ++i)
        {
            if (pts[i] > result.core_region.lo && pts[i] <= result.core_region.hi)
            {
                slice.base.points.push_back(pts[i]);
                slice.marks.push_back(result.output.marks[i]);
            }
        }
        slice.origin_index = origin_index_of(slice.base.points);
        return slice;
    }

    void write_witness_json(std::ostream &out, const PsiResult &result, const MarkDistribution &dist)
    {
        nlohmann::json j;
        j["core_region"] = {{"lo", to_string(result.core_region.lo)}, {"hi", to_string(result.core_region.hi)}};
        j["determinacy_margin"] = to_string(result.globes.determinacy_margin);
        nlohmann::json globes = nlohmann::json::array();
        for (const GlobeWitness &w : result.witness)
        {
            nlohmann::json g;
            g["index"] = w.index;
            g["interval"] = {to_string(w.interval_lo), to_string(w.interval_hi)};
            g["center"] = to_string(w.center);
            g["original_point"] = to_string(w.original_point);
            g["new_point"] = to_string(w.new_point);
            g["n"] = w.n;
            g["v"] = to_string(w.v);
            g["g"] = to_string(w.g);
            nlohmann::json marks = nlohmann::json::array();
            for (const std::int32_t m : w.marks)
            {
                marks.push_back(dist.symbols()[static_cast<std::size_t>(m)]);
            }
            g["marks"] = std::move(marks);
            globes.push_back(std::move(g));
        }
        j["globes"] = std::move(globes);
        out << j.dump(2) << '\n';
    }
}
