#include "dgm/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace dgm {

namespace {

std::vector<std::size_t> mask_indices(const Mask& mask) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) out.push_back(i);
    return out;
}

Mask restrict_mask(const Mask& m, const std::vector<std::size_t>& rows) {
    Mask out(rows.size(), false);
    for (std::size_t r = 0; r < rows.size(); ++r) out[r] = m[rows[r]];
    return out;
}

Tensor restrict_rows(const Tensor& t, const std::vector<std::size_t>& rows) {
    const std::size_t d = t.cols();
    std::vector<double> v(rows.size() * d);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t j = 0; j < d; ++j) v[r * d + j] = t.at(rows[r], j);
    return Tensor::constant({rows.size(), d}, std::move(v));
}

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.uniform_int(i)]);
}

}  // namespace

NodeDataset NodeDataset::subset(const std::vector<std::size_t>& rows) const {
    NodeDataset out;
    out.modality1 = restrict_rows(modality1, rows);
    if (modality2) out.modality2 = restrict_rows(*modality2, rows);
    out.labels.resize(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) out.labels[r] = labels[rows[r]];
    out.train_mask = restrict_mask(train_mask, rows);
    out.val_mask = restrict_mask(val_mask, rows);
    out.test_mask = restrict_mask(test_mask, rows);
    out.unseen_mask = restrict_mask(unseen_mask, rows);
    out.class_count = class_count;
    out.standardized = standardized;
    return out;
}

NodeDataset synth_clusters(std::size_t n, std::size_t classes, std::size_t d_node, std::size_t d_graph,
                           double separation, double noise, std::uint64_t seed) {
    if (classes < 2 || n < classes * 4) throw DataError("synth_clusters: need N >= 4*classes and classes >= 2");
    if (d_node < 1 || d_graph < 1) throw DataError("synth_clusters: feature widths must be positive");
    Rng rng(seed);
    Rng center_rng = rng.split(1);
    Rng noise_rng = rng.split(2);

    // class centers pairwise `separation` apart when classes <= d_graph
    // (scaled one-hot corners); random directions otherwise
    const double corner = separation / std::sqrt(2.0);
    std::vector<std::vector<double>> gcenters(classes, std::vector<double>(d_graph, 0.0));
    std::vector<std::vector<double>> ncenters(classes, std::vector<double>(d_node, 0.0));
    const double node_scale = 2.0 * separation;
    for (std::size_t c = 0; c < classes; ++c) {
        if (classes <= d_graph) {
            gcenters[c][c] = corner;
        } else {
            double norm = 0.0;
            for (double& v : gcenters[c]) {
                v = center_rng.gauss();
                norm += v * v;
            }
            for (double& v : gcenters[c]) v *= corner / std::sqrt(std::max(norm, 1e-12));
        }
        ncenters[c][c % d_node] = node_scale / std::sqrt(2.0);
    }

    NodeDataset ds;
    ds.class_count = classes;
    ds.labels.resize(n);
    std::vector<double> m1(n * d_node), m2(n * d_graph);
    const double node_noise = noise + 0.7;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = i % classes;  // balanced classes
        ds.labels[i] = c;
        for (std::size_t j = 0; j < d_node; ++j) m1[i * d_node + j] = ncenters[c][j] + node_noise * noise_rng.gauss();
        for (std::size_t j = 0; j < d_graph; ++j) m2[i * d_graph + j] = gcenters[c][j] + noise * noise_rng.gauss();
    }
    ds.modality1 = Tensor::constant({n, d_node}, std::move(m1));
    ds.modality2 = Tensor::constant({n, d_graph}, std::move(m2));
    ds.train_mask.assign(n, false);
    ds.val_mask.assign(n, false);
    ds.test_mask.assign(n, false);
    ds.unseen_mask.assign(n, false);
    return ds;
}

PointCloudSet synth_shapes(std::size_t count, std::size_t points_per_shape, std::uint64_t seed) {
    Rng rng(seed);
    PointCloudSet set;
    set.category_parts = {{0, 1}};
    for (std::size_t s = 0; s < count; ++s) {
        Rng srng = rng.split(s + 1);
        const double scale = 0.8 + 0.4 * srng.uniform();
        const double jitter = 0.03;
        std::vector<double> pts(points_per_shape * 3);
        Labels parts(points_per_shape);
        // roughly 60% rod points, 40% ball points
        const std::size_t rod_n = points_per_shape * 6 / 10;
        for (std::size_t p = 0; p < points_per_shape; ++p) {
            double x, y, z;
            if (p < rod_n) {
                const double ang = 2.0 * M_PI * srng.uniform();
                const double r = 0.1 * scale;
                x = r * std::cos(ang);
                y = r * std::sin(ang);
                z = 2.0 * scale * srng.uniform();
                parts[p] = 0;
            } else {
                // ball on top of the rod
                const double u = srng.uniform(), v = srng.uniform();
                const double th = std::acos(1.0 - 2.0 * u), ph = 2.0 * M_PI * v;
                const double r = 0.55 * scale;
                x = r * std::sin(th) * std::cos(ph);
                y = r * std::sin(th) * std::sin(ph);
                z = 2.6 * scale + r * std::cos(th);
                parts[p] = 1;
            }
            pts[p * 3 + 0] = x + jitter * srng.gauss();
            pts[p * 3 + 1] = y + jitter * srng.gauss();
            pts[p * 3 + 2] = z + jitter * srng.gauss();
        }
        set.shapes.push_back(Shape3D{Tensor::constant({points_per_shape, 3}, std::move(pts)), std::move(parts), 0});
    }
    return set;
}

Shape3D load_point_cloud(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open point cloud: " + path);
    std::vector<double> pts;
    Labels parts;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        double x, y, z;
        long long part;
        if (!(ss >> x >> y >> z >> part) || part < 0)
            throw DataError("bad point-cloud line " + std::to_string(lineno) + " in " + path);
        if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z))
            throw DataError("non-finite coordinate at line " + std::to_string(lineno) + " in " + path);
        pts.insert(pts.end(), {x, y, z});
        parts.push_back(static_cast<std::size_t>(part));
    }
    if (parts.empty()) throw DataError("empty point cloud: " + path);

    Shape3D shape;
    shape.points = Tensor::constant({parts.size(), 3}, std::move(pts));
    shape.parts = std::move(parts);
    // category from the file-name prefix, e.g. "2_lamp.xyz" -> 2
    std::string name = path;
    const auto slash = name.find_last_of("/\\");
    if (slash != std::string::npos) name = name.substr(slash + 1);
    const auto us = name.find('_');
    try {
        std::size_t pos;
        shape.category = std::stoull(name.substr(0, us), &pos);
        if (us != std::string::npos && pos != us) throw std::invalid_argument("prefix");
    } catch (const std::exception&) {
        throw DataError("file name '" + name + "' has no numeric category prefix");
    }
    return shape;
}

void save_point_cloud(const std::string& path, const Shape3D& shape) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write point cloud: " + path);
    out << std::setprecision(17);
    for (std::size_t p = 0; p < shape.points.rows(); ++p)
        out << shape.points.at(p, 0) << " " << shape.points.at(p, 1) << " " << shape.points.at(p, 2) << " "
            << shape.parts[p] << "\n";
}

PointCloudSet load_point_clouds(const std::vector<std::string>& paths) {
    if (paths.empty()) throw DataError("no point-cloud files given");
    PointCloudSet set;
    std::size_t max_cat = 0;
    for (const auto& p : paths) {
        set.shapes.push_back(load_point_cloud(p));
        max_cat = std::max(max_cat, set.shapes.back().category);
    }
    set.category_parts.assign(max_cat + 1, {});
    for (const auto& s : set.shapes) {
        auto& parts = set.category_parts[s.category];
        for (std::size_t p : s.parts)
            if (std::find(parts.begin(), parts.end(), p) == parts.end()) parts.push_back(p);
    }
    for (auto& parts : set.category_parts) std::sort(parts.begin(), parts.end());
    return set;
}

// ---------------------------------------------------------------- tabular

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

std::vector<std::string> split_commas(const std::string& s) {
    auto parts = split_csv_line(s);
    std::vector<std::string> out;
    for (auto& p : parts) {
        // trim
        std::size_t a = p.find_first_not_of(" \t");
        std::size_t b = p.find_last_not_of(" \t");
        if (a != std::string::npos) out.push_back(p.substr(a, b - a + 1));
    }
    return out;
}

}  // namespace

TabularSchema load_schema(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open schema file: " + path);
    TabularSchema s;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw DataError("schema line without '=': " + line);
        const std::string key = line.substr(0, eq), val = line.substr(eq + 1);
        if (key == "label")
            s.label_column = val;
        else if (key == "modality1")
            s.modality1_columns = split_commas(val);
        else if (key == "modality2")
            s.modality2_columns = split_commas(val);
        else
            throw DataError("unknown schema key: " + key);
    }
    if (s.label_column.empty() || s.modality1_columns.empty())
        throw DataError("schema must define label and modality1 columns");
    return s;
}

void save_schema(const std::string& path, const TabularSchema& schema) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write schema file: " + path);
    out << "label=" << schema.label_column << "\n";
    out << "modality1=";
    for (std::size_t i = 0; i < schema.modality1_columns.size(); ++i)
        out << (i ? "," : "") << schema.modality1_columns[i];
    out << "\n";
    if (!schema.modality2_columns.empty()) {
        out << "modality2=";
        for (std::size_t i = 0; i < schema.modality2_columns.size(); ++i)
            out << (i ? "," : "") << schema.modality2_columns[i];
        out << "\n";
    }
}

NodeDataset load_tabular(const std::string& path, const TabularSchema& schema) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open data file: " + path);
    std::string header;
    if (!std::getline(in, header)) throw DataError("empty data file: " + path);
    const auto columns = split_csv_line(header);

    auto col_index = [&](const std::string& name) -> std::size_t {
        const auto it = std::find(columns.begin(), columns.end(), name);
        if (it == columns.end()) throw DataError("column '" + name + "' missing from " + path);
        return static_cast<std::size_t>(it - columns.begin());
    };
    const std::size_t label_ix = col_index(schema.label_column);
    std::vector<std::size_t> m1_ix, m2_ix;
    for (const auto& c : schema.modality1_columns) m1_ix.push_back(col_index(c));
    for (const auto& c : schema.modality2_columns) m2_ix.push_back(col_index(c));

    std::vector<double> m1, m2;
    Labels labels;
    std::string line;
    std::size_t lineno = 1;
    auto parse_cell = [&](const std::vector<std::string>& cells, std::size_t ix) -> double {
        double v;
        try {
            std::size_t pos;
            v = std::stod(cells[ix], &pos);
            if (pos != cells[ix].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw DataError("unparsable numeric at line " + std::to_string(lineno) + ", column '" +
                            columns[ix] + "': '" + cells[ix] + "'");
        }
        if (!std::isfinite(v))
            throw DataError("non-finite value at line " + std::to_string(lineno) + ", column '" + columns[ix] + "'");
        return v;
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != columns.size())
            throw DataError("line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                            " cells, expected " + std::to_string(columns.size()));
        const double lab = parse_cell(cells, label_ix);
        if (lab < 0.0 || lab != std::floor(lab))
            throw DataError("non-integer label at line " + std::to_string(lineno));
        labels.push_back(static_cast<std::size_t>(lab));
        for (std::size_t ix : m1_ix) m1.push_back(parse_cell(cells, ix));
        for (std::size_t ix : m2_ix) m2.push_back(parse_cell(cells, ix));
    }
    if (labels.empty()) throw DataError("no data rows in " + path);

    NodeDataset ds;
    const std::size_t n = labels.size();
    ds.modality1 = Tensor::constant({n, m1_ix.size()}, std::move(m1));
    if (!m2_ix.empty()) ds.modality2 = Tensor::constant({n, m2_ix.size()}, std::move(m2));
    ds.labels = std::move(labels);
    ds.class_count = *std::max_element(ds.labels.begin(), ds.labels.end()) + 1;
    ds.train_mask.assign(n, false);
    ds.val_mask.assign(n, false);
    ds.test_mask.assign(n, false);
    ds.unseen_mask.assign(n, false);
    return ds;
}

void save_tabular(const std::string& path, const NodeDataset& ds, const TabularSchema& schema) {
    if (schema.modality1_columns.size() != ds.modality1.cols() ||
        schema.modality2_columns.size() != (ds.modality2 ? ds.modality2->cols() : 0))
        throw DataError("save_tabular: schema column counts do not match dataset");
    std::ofstream out(path);
    if (!out) throw DataError("cannot write data file: " + path);
    out << std::setprecision(17);
    out << schema.label_column;
    for (const auto& c : schema.modality1_columns) out << "," << c;
    for (const auto& c : schema.modality2_columns) out << "," << c;
    out << "\n";
    for (std::size_t i = 0; i < ds.num_nodes(); ++i) {
        out << ds.labels[i];
        for (std::size_t j = 0; j < ds.modality1.cols(); ++j) out << "," << ds.modality1.at(i, j);
        if (ds.modality2)
            for (std::size_t j = 0; j < ds.modality2->cols(); ++j) out << "," << ds.modality2->at(i, j);
        out << "\n";
    }
}

// ---------------------------------------------------------------- preprocessing

namespace {

Tensor standardize_tensor(const Tensor& t, const std::vector<std::size_t>& train_rows) {
    const std::size_t n = t.rows(), d = t.cols();
    std::vector<double> mu(d, 0.0), sigma(d, 0.0);
    for (std::size_t r : train_rows)
        for (std::size_t j = 0; j < d; ++j) mu[j] += t.at(r, j);
    for (double& m : mu) m /= static_cast<double>(train_rows.size());
    for (std::size_t r : train_rows)
        for (std::size_t j = 0; j < d; ++j) {
            const double dv = t.at(r, j) - mu[j];
            sigma[j] += dv * dv;
        }
    for (double& s : sigma) s = std::sqrt(s / static_cast<double>(train_rows.size()));
    std::vector<double> out(n * d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
            out[i * d + j] = sigma[j] > 0.0 ? (t.at(i, j) - mu[j]) / sigma[j] : 0.0;
    return Tensor::constant({n, d}, std::move(out));
}

}  // namespace

NodeDataset standardize(const NodeDataset& ds) {
    const auto train_rows = mask_indices(ds.train_mask);
    if (train_rows.empty()) throw ConfigError("standardize: empty train mask");
    NodeDataset out = ds;
    out.modality1 = standardize_tensor(ds.modality1, train_rows);
    if (ds.modality2) out.modality2 = standardize_tensor(*ds.modality2, train_rows);
    out.standardized = true;
    return out;
}

namespace {

// Solves (X^T X + alpha I) W = X^T Y by Cholesky; X restricted to the given
// rows and columns, Y the one-vs-rest +-1 target matrix.
std::vector<double> ridge_weights(const Tensor& x, const std::vector<std::size_t>& rows,
                                  const std::vector<std::size_t>& cols, const Labels& labels,
                                  std::size_t classes) {
    const std::size_t d = cols.size();
    std::vector<double> a(d * d, 0.0), b(d * classes, 0.0);
    for (std::size_t r : rows) {
        for (std::size_t p = 0; p < d; ++p) {
            const double xp = x.at(r, cols[p]);
            for (std::size_t q = p; q < d; ++q) a[p * d + q] += xp * x.at(r, cols[q]);
            for (std::size_t c = 0; c < classes; ++c) b[p * classes + c] += xp * (labels[r] == c ? 1.0 : -1.0);
        }
    }
    double trace = 0.0;
    for (std::size_t p = 0; p < d; ++p) trace += a[p * d + p];
    const double alpha = 1e-3 * trace / static_cast<double>(d) + 1e-9;
    for (std::size_t p = 0; p < d; ++p) {
        a[p * d + p] += alpha;
        for (std::size_t q = 0; q < p; ++q) a[p * d + q] = a[q * d + p];
    }
    // Cholesky A = L L^T
    std::vector<double> lmat(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a[i * d + j];
            for (std::size_t t = 0; t < j; ++t) s -= lmat[i * d + t] * lmat[j * d + t];
            if (i == j)
                lmat[i * d + i] = std::sqrt(std::max(s, 1e-12));
            else
                lmat[i * d + j] = s / lmat[j * d + j];
        }
    }
    // forward/back substitution per class column
    std::vector<double> w(d * classes, 0.0);
    std::vector<double> y(d);
    for (std::size_t c = 0; c < classes; ++c) {
        for (std::size_t i = 0; i < d; ++i) {
            double s = b[i * classes + c];
            for (std::size_t t = 0; t < i; ++t) s -= lmat[i * d + t] * y[t];
            y[i] = s / lmat[i * d + i];
        }
        for (std::size_t ii = d; ii-- > 0;) {
            double s = y[ii];
            for (std::size_t t = ii + 1; t < d; ++t) s -= lmat[t * d + ii] * w[t * classes + c];
            w[ii * classes + c] = s / lmat[ii * d + ii];
        }
    }
    return w;
}

std::vector<std::size_t> eliminate_features(const Tensor& x, const std::vector<std::size_t>& train_rows,
                                            const Labels& labels, std::size_t classes, std::size_t target) {
    std::vector<std::size_t> kept(x.cols());
    std::iota(kept.begin(), kept.end(), 0);
    while (kept.size() > target) {
        const auto w = ridge_weights(x, train_rows, kept, labels, classes);
        std::size_t worst = 0;
        double worst_score = 0.0;
        for (std::size_t p = 0; p < kept.size(); ++p) {
            double score = 0.0;
            for (std::size_t c = 0; c < classes; ++c) score += w[p * classes + c] * w[p * classes + c];
            if (p == 0 || score < worst_score) {
                worst_score = score;
                worst = p;
            }
        }
        kept.erase(kept.begin() + static_cast<std::ptrdiff_t>(worst));
    }
    return kept;
}

Tensor keep_columns(const Tensor& t, const std::vector<std::size_t>& cols) {
    std::vector<double> v(t.rows() * cols.size());
    for (std::size_t i = 0; i < t.rows(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) v[i * cols.size() + j] = t.at(i, cols[j]);
    return Tensor::constant({t.rows(), cols.size()}, std::move(v));
}

}  // namespace

FeatureSelection select_features(const NodeDataset& ds, std::size_t target_dim) {
    if (target_dim == 0) throw ConfigError("select_features: target_dim must be positive");
    const auto train_rows = mask_indices(ds.train_mask);
    if (train_rows.empty()) throw ConfigError("select_features: empty train mask");
    FeatureSelection out;
    out.dataset = ds;
    out.kept_modality1.resize(ds.modality1.cols());
    std::iota(out.kept_modality1.begin(), out.kept_modality1.end(), 0);
    if (target_dim < ds.modality1.cols()) {
        out.kept_modality1 = eliminate_features(ds.modality1, train_rows, ds.labels, ds.class_count, target_dim);
        out.dataset.modality1 = keep_columns(ds.modality1, out.kept_modality1);
    }
    if (ds.modality2) {
        out.kept_modality2.resize(ds.modality2->cols());
        std::iota(out.kept_modality2.begin(), out.kept_modality2.end(), 0);
        if (target_dim < ds.modality2->cols()) {
            out.kept_modality2 =
                eliminate_features(*ds.modality2, train_rows, ds.labels, ds.class_count, target_dim);
            out.dataset.modality2 = keep_columns(*ds.modality2, out.kept_modality2);
        }
    }
    return out;
}

// ---------------------------------------------------------------- splits

namespace {

// Per-class proportional allocation; leftover slots go to the largest
// fractional remainders so global split sizes are exact when N*frac is.
std::vector<std::vector<std::size_t>> allocate(const Labels& labels, std::size_t classes,
                                               const std::vector<double>& fractions, Rng& rng) {
    std::vector<std::vector<std::size_t>> by_class(classes);
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    for (auto& v : by_class) shuffle(v, rng);

    const std::size_t parts = fractions.size();
    std::vector<std::vector<std::size_t>> result(parts);
    // counts[c][p]
    std::vector<std::vector<std::size_t>> counts(classes, std::vector<std::size_t>(parts, 0));
    for (std::size_t p = 0; p + 1 < parts; ++p) {
        std::size_t want = static_cast<std::size_t>(std::llround(fractions[p] * static_cast<double>(labels.size())));
        std::size_t assigned = 0;
        std::vector<std::pair<double, std::size_t>> rema;
        for (std::size_t c = 0; c < classes; ++c) {
            const double exact = fractions[p] * static_cast<double>(by_class[c].size());
            counts[c][p] = static_cast<std::size_t>(std::floor(exact));
            assigned += counts[c][p];
            rema.emplace_back(-(exact - std::floor(exact)), c);
        }
        std::sort(rema.begin(), rema.end());
        for (std::size_t r = 0; r < rema.size() && assigned < want; ++r) {
            ++counts[rema[r].second][p];
            ++assigned;
        }
    }
    for (std::size_t c = 0; c < classes; ++c) {
        std::size_t used = 0;
        for (std::size_t p = 0; p + 1 < parts; ++p) used += counts[c][p];
        counts[c][parts - 1] = by_class[c].size() - used;  // remainder part gets the rest
        std::size_t cursor = 0;
        for (std::size_t p = 0; p < parts; ++p)
            for (std::size_t t = 0; t < counts[c][p]; ++t) result[p].push_back(by_class[c][cursor++]);
    }
    return result;
}

}  // namespace

void make_splits(NodeDataset& ds, SplitScheme scheme, std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t n = ds.num_nodes();
    ds.train_mask.assign(n, false);
    ds.val_mask.assign(n, false);
    ds.test_mask.assign(n, false);
    ds.unseen_mask.assign(n, false);
    if (scheme == SplitScheme::transductive) {
        auto parts = allocate(ds.labels, ds.class_count, {0.1, 0.9}, rng);
        for (std::size_t i : parts[0]) ds.test_mask[i] = true;
        for (std::size_t i : parts[1]) ds.train_mask[i] = true;
    } else {
        auto parts = allocate(ds.labels, ds.class_count, {0.1, 0.1, 0.8}, rng);
        for (std::size_t i : parts[0]) ds.unseen_mask[i] = true;
        for (std::size_t i : parts[1]) ds.val_mask[i] = true;
        for (std::size_t i : parts[2]) ds.train_mask[i] = true;
    }
}

std::vector<std::size_t> stratified_folds(const Labels& labels, std::size_t folds, std::uint64_t seed) {
    if (folds < 2) throw ConfigError("stratified_folds: folds must be >= 2");
    Rng rng(seed);
    const std::size_t classes = *std::max_element(labels.begin(), labels.end()) + 1;
    std::vector<std::size_t> class_size(classes, 0);
    for (std::size_t lab : labels) ++class_size[lab];
    const bool stratify = *std::min_element(class_size.begin(), class_size.end()) >= folds;
    if (!stratify)
        std::fprintf(stderr, "warning: a class has fewer than %zu members, using non-stratified folds\n", folds);

    std::vector<std::size_t> fold_of(labels.size());
    if (stratify) {
        std::vector<std::vector<std::size_t>> by_class(classes);
        for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
        for (auto& v : by_class) {
            shuffle(v, rng);
            for (std::size_t r = 0; r < v.size(); ++r) fold_of[v[r]] = r % folds;
        }
    } else {
        std::vector<std::size_t> order(labels.size());
        std::iota(order.begin(), order.end(), 0);
        shuffle(order, rng);
        for (std::size_t r = 0; r < order.size(); ++r) fold_of[order[r]] = r % folds;
    }
    return fold_of;
}

}  // namespace dgm
