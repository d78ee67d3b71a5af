#pragma once

// Cohort generation: expands a row-based cohort specification into concrete
// student profiles. Profiles come out in matched pairs so that neighbouring
// students differ in a single variable — either the confusion pair (shared
// mastered set) or the focused flag (identical partition otherwise).

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "quizsim/errors.hpp"
#include "quizsim/knowledge.hpp"
#include "quizsim/rng.hpp"

namespace quizsim {

struct CohortRow {
  int n_mastered = 0;
  int n_confused_kcs = 0;  // total confused KCs, i.e. 2 * number of pairs
  int n_unknown = 0;
  bool focused = false;
  int n_students = 0;
};

struct CohortSpec {
  std::vector<CohortRow> rows;

  int total_students() const {
    int total = 0;
    for (const auto& row : rows) total += row.n_students;
    return total;
  }
};

namespace detail {

// All ways to pick `n_pairs` candidates with pairwise-disjoint KCs; each
// assignment is a sorted list of candidate indices. Enumeration order is
// fixed by the candidate order, which keeps generation deterministic.
inline std::vector<std::vector<std::size_t>> disjoint_assignments(
    const std::vector<ConfusionPair>& candidates, int n_pairs) {
  std::vector<std::vector<std::size_t>> result;
  std::vector<std::size_t> current;

  auto conflicts = [&](std::size_t idx) {
    for (std::size_t chosen : current) {
      const auto& a = candidates[chosen];
      const auto& b = candidates[idx];
      if (a.involves(b.kc_a) || a.involves(b.kc_b)) return true;
    }
    return false;
  };

  auto recurse = [&](auto&& self, std::size_t start) -> void {
    if (static_cast<int>(current.size()) == n_pairs) {
      result.push_back(current);
      return;
    }
    for (std::size_t i = start; i < candidates.size(); ++i) {
      if (conflicts(i)) continue;
      current.push_back(i);
      self(self, i + 1);
      current.pop_back();
    }
  };
  recurse(recurse, 0);
  return result;
}

inline std::set<std::string> assignment_kcs(const std::vector<ConfusionPair>& candidates,
                                            const std::vector<std::size_t>& assignment) {
  std::set<std::string> kcs;
  for (std::size_t idx : assignment) {
    kcs.insert(candidates[idx].kc_a);
    kcs.insert(candidates[idx].kc_b);
  }
  return kcs;
}

}  // namespace detail

inline void validate_cohort_spec(const CohortSpec& spec, const KcUniverse& universe) {
  const int n_kcs = static_cast<int>(universe.size());
  for (std::size_t r = 0; r < spec.rows.size(); ++r) {
    const auto& row = spec.rows[r];
    const std::string where = "cohort row " + std::to_string(r + 1);
    if (row.n_mastered < 0 || row.n_confused_kcs < 0 || row.n_unknown < 0 || row.n_students < 0)
      throw ValidationError(where + ": negative count");
    if (row.n_confused_kcs % 2 != 0)
      throw ValidationError(where + ": confused-KC count " + std::to_string(row.n_confused_kcs) +
                            " is odd; confusions come in pairs");
    if (row.n_mastered + row.n_confused_kcs + row.n_unknown != n_kcs)
      throw ValidationError(where + ": counts " + std::to_string(row.n_mastered) + "+" +
                            std::to_string(row.n_confused_kcs) + "+" +
                            std::to_string(row.n_unknown) + " do not partition the " +
                            std::to_string(n_kcs) + " KCs");
  }
}

// Expands the spec into Σ n_students profiles, ids `prefix`1..`prefix`N.
//
// Within a row, students are generated two at a time: both members get the
// same randomly drawn mastered set and different confusion-pair assignments.
// An odd row emits its remainder as one independently drawn profile. A
// focused row whose (mastered, confused, unknown) shape matches an earlier
// non-focused row replays that row's partitions with the focused flag set,
// forming cross-row pairs that differ in the flag alone.
//
// Throws ValidationError when a row cannot be satisfied with the given
// candidates (not enough disjoint pairs, or no two assignments leave room
// for a shared mastered set).
inline std::vector<StudentProfile> generate_cohort(const CohortSpec& spec,
                                                   const KcUniverse& universe,
                                                   const std::vector<ConfusionPair>& candidates,
                                                   std::uint64_t seed,
                                                   const std::string& prefix = "GS") {
  validate_cohort_spec(spec, universe);
  for (const auto& pair : candidates) {
    if (pair.kc_a == pair.kc_b)
      throw ValidationError("confusion candidate {" + pair.kc_a + "," + pair.kc_b +
                            "} is degenerate");
    for (const auto& kc : {pair.kc_a, pair.kc_b})
      if (!universe.contains(kc))
        throw ValidationError("confusion candidate references unknown KC '" + kc + "'");
  }

  const int n_kcs = static_cast<int>(universe.size());
  const auto kc_ids = universe.ids();
  Rng rng(seed);

  std::vector<StudentProfile> cohort;
  cohort.reserve(static_cast<std::size_t>(spec.total_students()));
  // First profile index of each fully generated row, for focused-row replay.
  std::vector<std::size_t> row_starts;

  auto draw_mastered = [&](const std::set<std::string>& excluded, int count) {
    std::vector<std::string> free_kcs;
    for (const auto& id : kc_ids)
      if (!excluded.count(id)) free_kcs.push_back(id);
    auto picked = rng.sample_indices(free_kcs.size(), static_cast<std::size_t>(count));
    std::sort(picked.begin(), picked.end());  // keep universe order in the output
    std::vector<std::string> mastered;
    mastered.reserve(picked.size());
    for (std::size_t idx : picked) mastered.push_back(free_kcs[idx]);
    return mastered;
  };

  auto make_profile = [&](std::vector<std::string> mastered,
                          const std::vector<std::size_t>& assignment, bool focused) {
    StudentProfile p;
    p.id = prefix + std::to_string(cohort.size() + 1);
    p.mastered = std::move(mastered);
    for (std::size_t idx : assignment) {
      ConfusionPair pair = candidates[idx];
      pair.focused = focused;
      p.confusions.push_back(pair);
    }
    cohort.push_back(std::move(p));
  };

  for (std::size_t r = 0; r < spec.rows.size(); ++r) {
    const auto& row = spec.rows[r];
    const std::string where = "cohort row " + std::to_string(r + 1);
    const int n_pairs = row.n_confused_kcs / 2;
    row_starts.push_back(cohort.size());

    // Focused rows replay the earliest non-focused row of the same shape,
    // flipping only the flag.
    if (row.focused && row.n_confused_kcs > 0) {
      std::size_t donor = spec.rows.size();
      for (std::size_t q = 0; q < r; ++q) {
        const auto& other = spec.rows[q];
        if (!other.focused && other.n_mastered == row.n_mastered &&
            other.n_confused_kcs == row.n_confused_kcs &&
            other.n_unknown == row.n_unknown && other.n_students >= row.n_students) {
          donor = q;
          break;
        }
      }
      if (donor < spec.rows.size()) {
        for (int s = 0; s < row.n_students; ++s) {
          const StudentProfile& base = cohort[row_starts[donor] + static_cast<std::size_t>(s)];
          StudentProfile copy = base;
          copy.id = prefix + std::to_string(cohort.size() + 1);
          for (auto& pair : copy.confusions) pair.focused = true;
          cohort.push_back(std::move(copy));
        }
        continue;
      }
    }

    if (n_pairs == 0) {
      // No confusion variable to vary; emit independent draws.
      for (int s = 0; s < row.n_students; ++s)
        make_profile(draw_mastered({}, row.n_mastered), {}, false);
      continue;
    }

    if (candidates.empty())
      throw ValidationError(where + ": confusions requested but no candidate pairs given");

    const auto assignments = detail::disjoint_assignments(candidates, n_pairs);
    if (assignments.empty())
      throw ValidationError(where + ": no way to pick " + std::to_string(n_pairs) +
                            " disjoint confusion pairs from the candidates");

    // Assignments usable for an unpaired profile: enough KCs left for the
    // mastered set on their own.
    std::vector<std::size_t> single_ok;
    for (std::size_t i = 0; i < assignments.size(); ++i)
      if (n_kcs - static_cast<int>(detail::assignment_kcs(candidates, assignments[i]).size()) >=
          row.n_mastered)
        single_ok.push_back(i);

    // Ordered assignment pairs usable for a matched pair: distinct, and the
    // union of their KCs leaves room for the shared mastered set.
    std::vector<std::pair<std::size_t, std::size_t>> pair_ok;
    for (std::size_t i = 0; i < assignments.size(); ++i)
      for (std::size_t j = 0; j < assignments.size(); ++j) {
        if (i == j) continue;
        auto joint = detail::assignment_kcs(candidates, assignments[i]);
        for (const auto& kc : detail::assignment_kcs(candidates, assignments[j])) joint.insert(kc);
        if (n_kcs - static_cast<int>(joint.size()) >= row.n_mastered) pair_ok.emplace_back(i, j);
      }

    const int n_full_pairs = row.n_students / 2;
    if (n_full_pairs > 0 && pair_ok.empty())
      throw ValidationError(
          where + ": no two distinct pair assignments leave " + std::to_string(row.n_mastered) +
          " KCs free for a shared mastered set; add overlapping candidates or relax the row");
    if (row.n_students % 2 == 1 && single_ok.empty())
      throw ValidationError(where + ": no pair assignment leaves " +
                            std::to_string(row.n_mastered) + " KCs free for the mastered set");

    for (int p = 0; p < n_full_pairs; ++p) {
      const auto [ia, ib] = pair_ok[rng.below(static_cast<std::uint32_t>(pair_ok.size()))];
      auto joint = detail::assignment_kcs(candidates, assignments[ia]);
      for (const auto& kc : detail::assignment_kcs(candidates, assignments[ib])) joint.insert(kc);
      auto mastered = draw_mastered(joint, row.n_mastered);
      make_profile(mastered, assignments[ia], row.focused);
      make_profile(mastered, assignments[ib], row.focused);
    }
    if (row.n_students % 2 == 1) {
      const std::size_t ia = single_ok[rng.below(static_cast<std::uint32_t>(single_ok.size()))];
      make_profile(draw_mastered(detail::assignment_kcs(candidates, assignments[ia]),
                                 row.n_mastered),
                   assignments[ia], row.focused);
    }
  }

  return cohort;
}

}  // namespace quizsim
