#pragma once

#include <iosfwd>
#include <string>

#include "strobe/sme_engine.hpp"

namespace strobe {

/// CSV layout: a block of "# key=value" header lines, then the column line
/// "step_index,dR,unitary_id" and one row per step. unitary_id is empty on
/// steps without a pulse. Doubles are written with 17 significant digits so
/// the file round-trips bit-exactly.
void write_record(std::ostream& os, const MeasurementRecord& record);
void write_record(const std::string& path, const MeasurementRecord& record);

/// Throws RecordCorrupt on missing header keys, malformed rows or truncation.
MeasurementRecord read_record(std::istream& is);
MeasurementRecord read_record(const std::string& path);

/// Copy of `record` with every dR raised by sqrt(4 gamma) lambda dt and the
/// metadata marked, i.e. the record X + lambda I would have produced.
MeasurementRecord shift_record(const MeasurementRecord& record, double lambda);

/// "%.17g"
std::string format_double(double v);

}  // namespace strobe
