#include "ebinlab/report.hpp"

#include <iomanip>
#include <limits>
#include <sstream>

namespace ebinlab {

namespace {

template <typename Scalar>
Json num(Scalar v) {
  return number(static_cast<double>(v));
}

std::string csvNumber(double v) {
  std::ostringstream ss;
  ss << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return ss.str();
}

Json fitJson(const TailFit& f) {
  return Json{{"ratio", number(f.ratio)}, {"exponent", number(f.exponent)}, {"decreasing", f.decreasing}};
}

}  // namespace

Json reportHeader(const RunConfig& c) {
  return Json{{"tool", kVersion}, {"seed", c.seed}, {"config", configToJson(c)}};
}

template <typename Scalar>
Json candidateJson(const UpperCandidate<Scalar>& c) {
  Json j{{"family", c.family}, {"length", num(c.length)}, {"error_estimate", num(c.error)}, {"converged", c.converged}};
  if (c.s == c.s) j["s"] = num(c.s);
  if (c.w == c.w) j["w"] = num(c.w);
  return j;
}

template <typename Scalar>
Json lowerJson(const LowerBound<Scalar>& b) {
  Json j{{"value", num(b.value)}, {"kind", label(b.kind)}, {"mask", b.mask}, {"certified", b.certified}};
  if (b.kind == LowerKind::Theta) j["theta"] = num(b.theta), j["volume"] = num(b.volume);
  return j;
}

template <typename Scalar>
Json distanceJson(const DistanceEstimate<Scalar>& e, const Tolerances& tol, bool witness) {
  Json j;
  j["lower"] = num(e.lower);
  j["upper"] = num(e.upper);
  j["certified"] = e.certified;
  j["gap_ratio"] = e.lower > Scalar(0) ? num(e.upper / e.lower) : Json("inf");
  Json w;
  w["upper"] = candidateJson(e.upper_detail.best);
  w["lower"] = lowerJson(e.lower_witness);
  w["volume_bound"] = lowerJson(e.volume_bound);
  w["theta_bound"] = lowerJson(e.theta_bound);
  Json cands = Json::array();
  for (const auto& c : e.upper_detail.candidates) cands.push_back(candidateJson(c));
  w["candidates"] = std::move(cands);
  if constexpr (std::is_same_v<Scalar, double>) {
    if (witness) w["path"] = pathToJson(e.upper_detail.witness);
  }
  j["witnesses"] = std::move(w);
  j["tolerances"] = Json{{"eps_pd", tol.eps_pd}, {"eps_psd", tol.eps_psd}, {"eps_lin", tol.eps_lin}};
  j["quadrature_error_estimate"] = num(e.upper_detail.best.error);
  return j;
}

Json lengthJson(const PathLength<double>& len, const char* kind) {
  return Json{{"kind", kind},
              {"length", number(len.length)},
              {"error_estimate", number(len.error_estimate)},
              {"levels", len.levels},
              {"graded", len.graded},
              {"converged", len.converged}};
}

template <typename Scalar>
Json diagnosticsJson(const SequenceDiagnostics<Scalar>& d, const MetricSequence<Scalar>& seq) {
  Json j;
  j["generator"] = seq.generator;
  Json ks = Json::array();
  for (std::size_t i = 0; i < seq.size(); ++i) ks.push_back(number(seq.k(i)));
  j["k"] = std::move(ks);
  j["grid"] = gridToJson(seq.grid());
  j["counts"] = Json{{"collapsed", d.counts[0]}, {"converged", d.counts[1]}, {"undecided", d.counts[2]}};
  Json cls = Json::array(), mask = Json::array();
  for (std::size_t i = 0; i < d.point_class.size(); ++i) {
    cls.push_back(label(d.point_class[i]));
    mask.push_back(d.deflated_mask[i] ? 1 : 0);
  }
  j["point_class"] = std::move(cls);
  j["deflated_mask"] = std::move(mask);
  if constexpr (std::is_same_v<Scalar, double>) {
    j["omega_limit"] = fieldToJson(d.omega_limit);
  } else {
    j["omega_limit"] = fieldToJson(d.omega_limit.template cast<double>());
  }
  Json vols;
  for (std::size_t m = 0; m < d.mask_names.size(); ++m) {
    Json series = Json::array();
    for (auto v : d.volume_series[m]) series.push_back(num(v));
    vols[d.mask_names[m]] = Json{{"series", std::move(series)}, {"limit", num(d.limit_volume[m])}};
  }
  j["volumes"] = std::move(vols);
  Json l1 = Json::array(), theta = Json::array();
  for (auto v : d.omega_l1) l1.push_back(num(v));
  for (auto v : d.theta_m) theta.push_back(num(v));
  j["omega_l1"] = std::move(l1);
  j["theta_m"] = std::move(theta);
  Json pairs = Json::array();
  for (std::size_t k = 0; k < d.pairwise.size(); ++k) {
    const auto& e = d.pairwise[k];
    pairs.push_back(Json{{"from", number(seq.k(k))},
                         {"to", number(seq.k(k + 1))},
                         {"lower", num(e.lower)},
                         {"upper", num(e.upper)},
                         {"family", e.upper_detail.best.family},
                         {"certified", e.certified}});
  }
  j["pairwise"] = std::move(pairs);
  j["summability"] = num(d.summability);
  j["upper_tail"] = fitJson(d.upper_tail);
  j["surrogates"] = Json{{"cauchy", d.cauchy_surrogate},
                         {"summable", d.summable_surrogate},
                         {"deflated_mismatch", num(d.deflated_mismatch)},
                         {"unconverged_fraction", num(d.unconverged_fraction)}};
  j["certified"] = d.certified;
  j["note"] = "nodes are treated as points; almost-everywhere statements are checked nodewise";
  return j;
}

template <typename Scalar>
Json equivalenceJson(const EquivalenceResult<Scalar>& r) {
  Json terms = Json::array();
  for (const auto& e : r.termwise) terms.push_back(Json{{"lower", num(e.lower)}, {"upper", num(e.upper)}});
  return Json{{"verdict", label(r.verdict)},
              {"reason", r.reason},
              {"termwise", std::move(terms)},
              {"upper_fit", fitJson(r.upper_fit)},
              {"lower_fit", fitJson(r.lower_fit)},
              {"upper_to_zero", r.upper_to_zero},
              {"lower_separated", r.lower_separated},
              {"mismatch_volume", num(r.mismatch_volume)},
              {"union_deflated_nodes", r.union_deflated}};
}

template <typename Scalar>
std::map<std::string, std::string> diagnosticsCsv(const SequenceDiagnostics<Scalar>& d,
                                                  const MetricSequence<Scalar>& seq) {
  std::map<std::string, std::string> out;
  {
    std::ostringstream s;
    s << "term,k";
    for (const auto& name : d.mask_names) s << ',' << name;
    s << '\n';
    for (std::size_t k = 0; k < seq.size(); ++k) {
      s << k << ',' << csvNumber(seq.k(k));
      for (const auto& series : d.volume_series) s << ',' << csvNumber(static_cast<double>(series[k]));
      s << '\n';
    }
    s << "limit,";
    for (auto v : d.limit_volume) s << ',' << csvNumber(static_cast<double>(v));
    s << '\n';
    out["volume_series.csv"] = s.str();
  }
  {
    std::ostringstream s;
    s << "N,k,theta_m,omega_l1\n";
    for (std::size_t n = 0; n < d.omega_l1.size(); ++n)
      s << n + 1 << ',' << csvNumber(seq.k(n + 1)) << ',' << csvNumber(static_cast<double>(d.theta_m[n])) << ','
        << csvNumber(static_cast<double>(d.omega_l1[n])) << '\n';
    out["omega_l1.csv"] = s.str();
  }
  {
    std::ostringstream s;
    s << "k_from,k_to,lower,upper,upper_partial_sum,family\n";
    for (std::size_t k = 0; k < d.pairwise.size(); ++k)
      s << csvNumber(seq.k(k)) << ',' << csvNumber(seq.k(k + 1)) << ','
        << csvNumber(static_cast<double>(d.pairwise[k].lower)) << ','
        << csvNumber(static_cast<double>(d.pairwise[k].upper)) << ','
        << csvNumber(static_cast<double>(d.upper_partial_sums[k])) << ',' << d.pairwise[k].upper_detail.best.family
        << '\n';
    out["pairwise.csv"] = s.str();
  }
  return out;
}

std::string gnuplotScript(const std::vector<std::string>& names) {
  std::ostringstream s;
  s << "set datafile separator ','\nset key autotitle columnhead\nset logscale xy\n";
  for (const auto& n : names) {
    s << "\nset title '" << n << ": consecutive distance bounds'\n"
      << "plot '" << n << "_pairwise.csv' using 2:3 with linespoints, '' using 2:4 with linespoints\npause -1\n";
    s << "set title '" << n << ": volumes'\n"
      << "plot for [c=3:*] '" << n << "_volume_series.csv' using 2:c with linespoints\npause -1\n";
  }
  return s.str();
}

template Json candidateJson(const UpperCandidate<double>&);
template Json candidateJson(const UpperCandidate<long double>&);
template Json lowerJson(const LowerBound<double>&);
template Json lowerJson(const LowerBound<long double>&);
template Json distanceJson(const DistanceEstimate<double>&, const Tolerances&, bool);
template Json distanceJson(const DistanceEstimate<long double>&, const Tolerances&, bool);
template Json diagnosticsJson(const SequenceDiagnostics<double>&, const MetricSequence<double>&);
template Json diagnosticsJson(const SequenceDiagnostics<long double>&, const MetricSequence<long double>&);
template Json equivalenceJson(const EquivalenceResult<double>&);
template Json equivalenceJson(const EquivalenceResult<long double>&);
template std::map<std::string, std::string> diagnosticsCsv(const SequenceDiagnostics<double>&,
                                                           const MetricSequence<double>&);
template std::map<std::string, std::string> diagnosticsCsv(const SequenceDiagnostics<long double>&,
                                                           const MetricSequence<long double>&);

}  // namespace ebinlab
