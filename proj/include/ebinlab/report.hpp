#pragma once

// Report assembly: JSON documents and CSV series for external plotting.

#include "ebinlab/config.hpp"

#include <map>
#include <string>

namespace ebinlab {

/// {"tool": version, "seed": ..., "config": {...}}; every report starts with it.
Json reportHeader(const RunConfig& c);

template <typename Scalar>
Json candidateJson(const UpperCandidate<Scalar>& c);

template <typename Scalar>
Json lowerJson(const LowerBound<Scalar>& b);

/// lower, upper, witnesses (the winning path embedded when `witness` is set), tolerances and
/// quadrature error estimates.
template <typename Scalar>
Json distanceJson(const DistanceEstimate<Scalar>& e, const Tolerances& tol, bool witness);

Json lengthJson(const PathLength<double>& len, const char* kind);

template <typename Scalar>
Json diagnosticsJson(const SequenceDiagnostics<Scalar>& d, const MetricSequence<Scalar>& seq);

template <typename Scalar>
Json equivalenceJson(const EquivalenceResult<Scalar>& r);

/// CSV files by name: volume_series.csv, omega_l1.csv, pairwise.csv.
template <typename Scalar>
std::map<std::string, std::string> diagnosticsCsv(const SequenceDiagnostics<Scalar>& d,
                                                  const MetricSequence<Scalar>& seq);

/// gnuplot script plotting the CSV series of the named sequences.
std::string gnuplotScript(const std::vector<std::string>& names);

}  // namespace ebinlab
