#include "gmvae/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "gmvae/error.hpp"

namespace gmvae {

namespace {

std::vector<unsigned char> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    return std::vector<unsigned char>((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::uint32_t read_be32(const std::vector<unsigned char>& b, std::size_t off) {
    return (std::uint32_t(b[off]) << 24) | (std::uint32_t(b[off + 1]) << 16) |
           (std::uint32_t(b[off + 2]) << 8) | std::uint32_t(b[off + 3]);
}

void write_be32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

struct IdxHeader {
    std::uint32_t magic = 0;
    std::vector<std::size_t> dims;
    std::size_t payload_offset = 0;
};

IdxHeader parse_idx_header(const std::vector<unsigned char>& bytes, const std::string& path,
                           std::uint32_t expected_magic) {
    if (bytes.size() < 4) throw DataError(path + ": truncated IDX header at byte offset 0");
    IdxHeader h;
    h.magic = read_be32(bytes, 0);
    if (bytes[0] != 0 || bytes[1] != 0 || bytes[2] != 0x08) {
        throw DataError(path + ": bad IDX magic at byte offset 0 (expected 00 00 08 <rank>)");
    }
    if (h.magic != expected_magic) {
        std::ostringstream os;
        os << path << ": unexpected IDX magic 0x" << std::hex << h.magic << " at byte offset 0";
        throw DataError(os.str());
    }
    const std::size_t rank = bytes[3];
    if (bytes.size() < 4 + 4 * rank) {
        throw DataError(path + ": truncated IDX dimension list at byte offset " + std::to_string(bytes.size()));
    }
    std::size_t total = 1;
    for (std::size_t i = 0; i < rank; ++i) {
        const std::uint32_t e = read_be32(bytes, 4 + 4 * i);
        if (e == 0) throw DataError(path + ": zero extent at byte offset " + std::to_string(4 + 4 * i));
        if (total > std::numeric_limits<std::size_t>::max() / e) {
            throw DataError(path + ": extent overflow at byte offset " + std::to_string(4 + 4 * i));
        }
        total *= e;
        h.dims.push_back(e);
    }
    h.payload_offset = 4 + 4 * rank;
    if (bytes.size() < h.payload_offset + total) {
        throw DataError(path + ": truncated IDX payload, file ends at byte offset " +
                        std::to_string(bytes.size()) + " but " +
                        std::to_string(h.payload_offset + total) + " bytes are declared");
    }
    return h;
}

}  // namespace

Dataset load_idx_images(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    const auto h = parse_idx_header(bytes, path, 0x00000803u);
    Dataset ds;
    ds.name = path;
    ds.n = h.dims[0];
    ds.d = h.dims[1] * h.dims[2];
    ds.features.resize(ds.n * ds.d);
    for (std::size_t i = 0; i < ds.features.size(); ++i) {
        ds.features[i] = static_cast<double>(bytes[h.payload_offset + i]) / 255.0;
    }
    return ds;
}

std::vector<int> load_idx_labels(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    const auto h = parse_idx_header(bytes, path, 0x00000801u);
    std::vector<int> labels(h.dims[0]);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        labels[i] = static_cast<int>(bytes[h.payload_offset + i]);
    }
    return labels;
}

void write_idx_images(const std::string& path, const Dataset& ds, std::size_t rows, std::size_t cols) {
    if (rows * cols != ds.d) throw ContractError("write_idx_images: rows*cols != d");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    write_be32(out, 0x00000803u);
    write_be32(out, static_cast<std::uint32_t>(ds.n));
    write_be32(out, static_cast<std::uint32_t>(rows));
    write_be32(out, static_cast<std::uint32_t>(cols));
    for (double v : ds.features) {
        const double scaled = std::round(v * 255.0);
        out.put(static_cast<char>(static_cast<unsigned char>(std::clamp(scaled, 0.0, 255.0))));
    }
}

void binarize(Dataset& ds, BinarizeMode mode, double threshold, RngStream* rng) {
    if (mode == BinarizeMode::stochastic && rng == nullptr) {
        throw ContractError("binarize: stochastic mode needs an RngStream");
    }
    for (auto& v : ds.features) {
        if (v < 0.0 || v > 1.0) throw ContractError("binarize: features must lie in [0, 1]");
        if (mode == BinarizeMode::threshold) {
            v = v >= threshold ? 1.0 : 0.0;
        } else {
            v = rng->uniform01() < v ? 1.0 : 0.0;
        }
    }
}

Dataset synth_gmm(std::size_t k, std::size_t n_per_cluster, std::size_t d, double separation, double sigma,
                  std::uint64_t seed) {
    if (k < 2) throw ConfigError("synth_gmm: k must be >= 2");
    if (d == 0 || n_per_cluster == 0) throw ConfigError("synth_gmm: d and n_per_cluster must be >= 1");
    if (!(separation > 0.0) || !(sigma > 0.0)) throw ConfigError("synth_gmm: separation and sigma must be > 0");

    RngStream rng(seed);
    const std::size_t n = k * n_per_cluster;
    std::vector<double> raw(n * d);
    std::vector<int> labels(n);
    for (std::size_t c = 0; c < k; ++c) {
        const std::size_t axis = c % d;
        const double level = separation * static_cast<double>(1 + c / d);
        for (std::size_t i = 0; i < n_per_cluster; ++i) {
            const std::size_t row = c * n_per_cluster + i;
            labels[row] = static_cast<int>(c);
            for (std::size_t j = 0; j < d; ++j) {
                raw[row * d + j] = (j == axis ? level : 0.0) + sigma * rng.normal();
            }
        }
    }

    // deterministic row shuffle so a positional train/val split is stratified
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);

    Dataset ds;
    ds.name = "synth_gmm";
    ds.n = n;
    ds.d = d;
    ds.features.resize(n * d);
    ds.labels.resize(n);
    double lo = raw[0], hi = raw[0];
    for (double v : raw) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi > lo ? hi - lo : 1.0;
    for (std::size_t r = 0; r < n; ++r) {
        ds.labels[r] = labels[perm[r]];
        for (std::size_t j = 0; j < d; ++j) {
            ds.features[r * d + j] = (raw[perm[r] * d + j] - lo) / span;
        }
    }
    ds.rescale_offset = lo;
    ds.rescale_scale = span;
    return ds;
}

std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch_size, bool shuffle,
                                              RngStream& rng) {
    if (batch_size == 0) throw ConfigError("batches: batch_size must be >= 1");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    if (shuffle) rng.shuffle(order);
    std::vector<std::vector<std::size_t>> blocks;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t end = std::min(n, start + batch_size);
        blocks.emplace_back(order.begin() + start, order.begin() + end);
    }
    return blocks;
}

Tensor gather_rows(const Dataset& ds, const std::vector<std::size_t>& rows) {
    Tensor x(Shape{rows.size(), ds.d}, 0.0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double* src = ds.features.data() + rows[i] * ds.d;
        std::copy(src, src + ds.d, x.data().begin() + i * ds.d);
    }
    return x;
}

std::vector<int> gather_labels(const Dataset& ds, const std::vector<std::size_t>& rows) {
    std::vector<int> out;
    if (!ds.has_labels()) return out;
    out.reserve(rows.size());
    for (auto r : rows) out.push_back(ds.labels[r]);
    return out;
}

std::pair<Dataset, Dataset> split_train_val(const Dataset& ds, double val_fraction) {
    if (!(val_fraction > 0.0) || val_fraction >= 1.0) {
        throw ConfigError("split_train_val: fraction must be in (0, 1)");
    }
    const std::size_t n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(ds.n * val_fraction)));
    if (n_val >= ds.n) throw ConfigError("split_train_val: dataset too small to split");
    const std::size_t n_train = ds.n - n_val;

    auto take = [&](std::size_t begin, std::size_t count, const std::string& suffix) {
        Dataset part;
        part.name = ds.name + suffix;
        part.n = count;
        part.d = ds.d;
        part.features.assign(ds.features.begin() + begin * ds.d, ds.features.begin() + (begin + count) * ds.d);
        if (ds.has_labels()) part.labels.assign(ds.labels.begin() + begin, ds.labels.begin() + begin + count);
        part.rescale_offset = ds.rescale_offset;
        part.rescale_scale = ds.rescale_scale;
        return part;
    };
    return {take(0, n_train, "/train"), take(n_train, n_val, "/val")};
}

void write_dataset_csv(const std::string& path, const Dataset& ds) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    for (std::size_t j = 0; j < ds.d; ++j) out << "f" << j << ",";
    out << (ds.has_labels() ? "label" : "") << "\n";
    char buf[32];
    for (std::size_t i = 0; i < ds.n; ++i) {
        for (std::size_t j = 0; j < ds.d; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", ds.at(i, j));
            out << buf << ",";
        }
        if (ds.has_labels()) out << ds.labels[i];
        out << "\n";
    }
}

Dataset load_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty CSV");

    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) header.push_back(field);
    }
    if (header.empty() || header[0] != "f0") throw DataError(path + ": expected header starting with f0");
    const bool labeled = header.back() == "label";
    const std::size_t d = labeled ? header.size() - 1 : header.size();

    Dataset ds;
    ds.name = path;
    ds.d = d;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::size_t col = 0;
        while (std::getline(ss, field, ',')) {
            if (field.empty() && col == d) break;  // unlabeled rows end with ','
            double v;
            try {
                v = std::stod(field);
            } catch (const std::exception&) {
                throw DataError(path + ": line " + std::to_string(lineno) + ": bad number '" + field + "'");
            }
            if (col < d) {
                if (v < 0.0 || v > 1.0) {
                    throw DataError(path + ": line " + std::to_string(lineno) + ": feature outside [0, 1]");
                }
                ds.features.push_back(v);
            } else if (labeled) {
                ds.labels.push_back(static_cast<int>(v));
            }
            ++col;
        }
        if (col < d || (labeled && col != d + 1)) {
            throw DataError(path + ": line " + std::to_string(lineno) + ": expected " +
                            std::to_string(d + (labeled ? 1 : 0)) + " fields");
        }
        ++ds.n;
    }
    if (ds.n == 0) throw DataError(path + ": no data rows");
    return ds;
}

}  // namespace gmvae
