#include "stabsched/dataset.hpp"

#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "stabsched/common.hpp"

namespace stabsched {

int Dataset::metric_column(const std::string& name) const {
    for (int k = 0; k < int(metric_names.size()); ++k)
        if (metric_names[std::size_t(k)] == name) return k;
    return -1;
}

Dataset build_dataset(const NetworkCase& c, StabFamily family,
                      const std::vector<OperatingPoint>& points, const StabilityLimits& lim) {
    if (points.empty()) throw ValidationError("dataset: no samples");
    Dataset d;
    d.family = family;
    d.feature_names = feature_names(c, family);

    std::vector<SurrogateInstance> insts;
    for (const auto& inst : surrogate_instances(c))
        if (inst.family == family) insts.push_back(inst);
    if (insts.empty())
        throw ValidationError(std::string("case has no ") + family_tag(family) + " instances");
    for (const auto& inst : insts) d.metric_names.push_back(instance_name(inst));

    d.X.resize(long(points.size()), long(d.feature_names.size()));
    d.G.resize(long(points.size()), long(insts.size()));
    for (std::size_t i = 0; i < points.size(); ++i) {
        d.X.row(long(i)) = feature_values(c, family, points[i]).transpose();
        for (std::size_t k = 0; k < insts.size(); ++k)
            d.G(long(i), long(k)) = instance_margin(c, insts[k], points[i], lim);
    }
    return d;
}

void write_dataset_csv(const Dataset& d, std::ostream& os) {
    for (std::size_t k = 0; k < d.feature_names.size(); ++k) {
        if (k) os << ',';
        os << d.feature_names[k];
    }
    for (const auto& m : d.metric_names) os << ",g:" << m;
    os << '\n';
    for (long i = 0; i < d.X.rows(); ++i) {
        for (long j = 0; j < d.X.cols(); ++j) {
            if (j) os << ',';
            os << format_double(d.X(i, j));
        }
        for (long k = 0; k < d.G.cols(); ++k) os << ',' << format_double(d.G(i, k));
        os << '\n';
    }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

}  // namespace

Dataset read_dataset_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ValidationError("dataset CSV: empty stream");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = split_csv_line(line);

    Dataset d;
    bool in_metrics = false;
    for (const auto& col : header) {
        if (col.rfind("g:", 0) == 0) {
            in_metrics = true;
            d.metric_names.push_back(col.substr(2));
        } else {
            if (in_metrics)
                throw ValidationError("dataset CSV: feature column '" + col +
                                      "' after metric columns");
            d.feature_names.push_back(col);
        }
    }
    if (d.metric_names.empty()) throw ValidationError("dataset CSV: no metric columns");
    if (d.feature_names.empty()) throw ValidationError("dataset CSV: no feature columns");
    {
        const std::string& first = d.metric_names.front();
        const std::size_t us = first.find("_bus");
        d.family = family_from_tag(us == std::string::npos ? first : first.substr(0, us));
    }

    std::vector<double> values;
    int rows = 0;
    const std::size_t ncols = header.size();
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != ncols)
            throw ValidationError("dataset CSV: row " + std::to_string(rows + 1) + " has " +
                                  std::to_string(cells.size()) + " cells, expected " +
                                  std::to_string(ncols));
        for (const auto& cell : cells) {
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || *end != '\0')
                throw ValidationError("dataset CSV: bad number '" + cell + "'");
            values.push_back(v);
        }
        ++rows;
    }
    if (rows == 0) throw ValidationError("dataset CSV: no data rows");

    const long nf = long(d.feature_names.size());
    const long nm = long(d.metric_names.size());
    d.X.resize(rows, nf);
    d.G.resize(rows, nm);
    for (long i = 0; i < rows; ++i) {
        for (long j = 0; j < nf; ++j) d.X(i, j) = values[std::size_t(i * (nf + nm) + j)];
        for (long k = 0; k < nm; ++k) d.G(i, k) = values[std::size_t(i * (nf + nm) + nf + k)];
    }
    return d;
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open dataset " + path);
    return read_dataset_csv(in);
}

void save_dataset(const Dataset& d, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write dataset " + path);
    write_dataset_csv(d, out);
}

}  // namespace stabsched
