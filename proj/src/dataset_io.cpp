#include "bislab/dataset_io.hpp"

#include "bislab/csv.hpp"
#include "bislab/error.hpp"

#include <fstream>
#include <istream>
#include <ostream>

namespace bislab {

namespace {

constexpr std::string_view kMagic = "# bislab-dataset v1";

ClassCounts counts_of(const std::vector<int>& labels, int k) {
    ClassCounts counts(static_cast<std::size_t>(k), 0);
    for (int y : labels)
        ++counts[y];
    return counts;
}

csv::Row counts_row(std::string name, const ClassCounts& counts) {
    csv::Row row{std::move(name)};
    for (auto c : counts)
        row.push_back(std::to_string(c));
    return row;
}

void write_points(std::ostream& out, std::string_view tag, const Matrix& points,
                  const std::vector<int>& labels) {
    for (Eigen::Index r = 0; r < points.rows(); ++r) {
        out << tag << ',' << labels[static_cast<std::size_t>(r)];
        for (Eigen::Index d = 0; d < points.cols(); ++d)
            out << ',' << csv::format_double(points(r, d));
        out << '\n';
    }
}

std::string next_line(std::istream& in, const char* what) {
    std::string line;
    if (!std::getline(in, line))
        throw InvalidInput(std::string("dataset file truncated before ") + what);
    return line;
}

ClassCounts read_counts(std::istream& in, const char* name, int k) {
    const auto row = csv::parse_row(next_line(in, name));
    if (row.empty() || row[0] != name || static_cast<int>(row.size()) != k + 1)
        throw InvalidInput(std::string("dataset file: malformed ") + name + " line");
    ClassCounts counts;
    for (int j = 0; j < k; ++j)
        counts.push_back(csv::parse_int(row[j + 1]));
    return counts;
}

std::int64_t sum(const ClassCounts& c) {
    std::int64_t s = 0;
    for (auto v : c)
        s += v;
    return s;
}

} // namespace

void save_dataset(std::ostream& out, const SyntheticData& data) {
    const int k = data.labeled.num_classes();
    const auto dim = data.labeled.points.cols();
    out << kMagic << '\n';
    out << "k," << k << '\n';
    out << "dim," << dim << '\n';
    out << csv::format_row(counts_row("labeled_counts", counts_of(data.labeled.labels, k))) << '\n';
    out << csv::format_row(counts_row("unlabeled_counts", counts_of(data.unlabeled.hidden_labels, k)))
        << '\n';
    out << csv::format_row(counts_row("test_counts", counts_of(data.test.labels, k))) << '\n';
    out << "split,label";
    for (Eigen::Index d = 0; d < dim; ++d)
        out << ",x" << d;
    out << '\n';
    write_points(out, "L", data.labeled.points, data.labeled.labels);
    write_points(out, "U", data.unlabeled.points, data.unlabeled.hidden_labels);
    write_points(out, "T", data.test.points, data.test.labels);
}

SyntheticData load_dataset(std::istream& in) {
    if (next_line(in, "header") != kMagic)
        throw InvalidInput("not a bislab dataset file");
    auto scalar = [&](const char* name) {
        const auto row = csv::parse_row(next_line(in, name));
        if (row.size() != 2 || row[0] != name)
            throw InvalidInput(std::string("dataset file: malformed ") + name + " line");
        return static_cast<int>(csv::parse_int(row[1]));
    };
    const int k = scalar("k");
    const int dim = scalar("dim");
    if (k < 2 || dim < 1)
        throw InvalidInput("dataset file: bad k or dim");
    const ClassCounts lc = read_counts(in, "labeled_counts", k);
    const ClassCounts uc = read_counts(in, "unlabeled_counts", k);
    const ClassCounts tc = read_counts(in, "test_counts", k);
    next_line(in, "column header");

    SyntheticData data;
    data.labeled.points.resize(sum(lc), dim);
    data.unlabeled.points.resize(sum(uc), dim);
    data.test.points.resize(sum(tc), dim);

    Eigen::Index rows[3] = {0, 0, 0};
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        const auto row = csv::parse_row(line);
        if (static_cast<int>(row.size()) != dim + 2)
            throw InvalidInput("dataset file: row has wrong width");
        int which = row[0] == "L" ? 0 : row[0] == "U" ? 1 : row[0] == "T" ? 2 : -1;
        if (which < 0)
            throw InvalidInput("dataset file: unknown split tag '" + row[0] + "'");
        Matrix& target = which == 0 ? data.labeled.points
                         : which == 1 ? data.unlabeled.points
                                      : data.test.points;
        std::vector<int>& labels = which == 0   ? data.labeled.labels
                                   : which == 1 ? data.unlabeled.hidden_labels
                                                : data.test.labels;
        if (rows[which] >= target.rows())
            throw InvalidInput("dataset file: more rows than the header declares");
        labels.push_back(static_cast<int>(csv::parse_int(row[1])));
        for (int d = 0; d < dim; ++d)
            target(rows[which], d) = csv::parse_double(row[d + 2]);
        ++rows[which];
    }
    if (rows[0] != data.labeled.points.rows() || rows[1] != data.unlabeled.points.rows() ||
        rows[2] != data.test.points.rows())
        throw InvalidInput("dataset file: fewer rows than the header declares");

    index_by_class(data.labeled, k);
    index_by_class(data.test, k);
    if (data.labeled.class_counts() != lc || counts_of(data.unlabeled.hidden_labels, k) != uc ||
        data.test.class_counts() != tc)
        throw InvalidInput("dataset file: per-class counts disagree with header");
    return data;
}

void save_dataset_file(const std::string& path, const SyntheticData& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write '" + path + "'");
    save_dataset(out, data);
}

SyntheticData load_dataset_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open '" + path + "'");
    return load_dataset(in);
}

} // namespace bislab
