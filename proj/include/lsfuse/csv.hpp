#pragma once

// CSV writers for boundaries, incident profiles and objective traces.
// Row coordinates are reported in the input frame: `omega_row` is the index
// along the illumination axis, `col` the index across it.

#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "boundary_em.hpp"
#include "errors.hpp"
#include "geometry.hpp"
#include "image.hpp"

namespace lsfuse::csv {

// extent = number of samples along the illumination axis.
inline int to_input_row(int canonical_row, const AxisMeta& meta, int extent) {
    return meta.a_side == EntrySide::bottom ? extent - 1 - canonical_row : canonical_row;
}

inline void write_boundaries(std::ostream& out, const std::vector<em::BoundaryCurve>& curves, const AxisMeta& meta,
                             int extent) {
    out << "z,col,omega_row,valid\n";
    for (std::size_t z = 0; z < curves.size(); ++z) {
        const auto& c = curves[z];
        for (int i = 0; i < c.cols(); ++i)
            out << z << ',' << i << ',' << to_input_row(c.omega[static_cast<std::size_t>(i)], meta, extent) << ','
                << (c.valid[static_cast<std::size_t>(i)] ? 1 : 0) << '\n';
    }
}

inline void write_profile(std::ostream& out, const geometry::IncidentProfile& p) {
    out << "col,p_u,p_l,valid\n";
    for (int i = 0; i < p.cols(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        out << i << ',' << p.p_u[k] << ',' << p.p_l[k] << ',' << (p.valid[k] ? 1 : 0) << '\n';
    }
}

inline void write_objective(std::ostream& out, const std::vector<double>& trace) {
    out << "iter,objective\n";
    out.precision(17);
    for (std::size_t k = 0; k < trace.size(); ++k) out << k << ',' << trace[k] << '\n';
}

// One block of `iter,objective` rows per slice, prefixed by the slice index.
inline void write_objectives(std::ostream& out, const std::vector<em::BoundaryCurve>& curves) {
    out << "z,iter,objective\n";
    out.precision(17);
    for (std::size_t z = 0; z < curves.size(); ++z)
        for (std::size_t k = 0; k < curves[z].objective_trace.size(); ++k)
            out << z << ',' << k << ',' << curves[z].objective_trace[k] << '\n';
}

template <typename Writer>
void write_file(const std::string& path, Writer&& writer) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::io, "cannot open " + path + " for writing");
    writer(out);
    if (!out) fail(ErrorKind::io, "write failed for " + path);
}

}  // namespace lsfuse::csv
