#include "tricortex/data.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tricortex/rng.hpp"

namespace tricortex {

Dataset load_binary_images(const std::string& path, const BinaryLayout& layout) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  in.seekg(0, std::ios::end);
  int64_t bytes = static_cast<int64_t>(in.tellg());
  in.seekg(0);
  int64_t rec = layout.record_bytes();
  if (bytes == 0 || bytes % rec != 0) {
    throw DataError(path + ": size " + std::to_string(bytes) +
                    " is not a multiple of the " + std::to_string(rec) +
                    "-byte record; truncated at offset " +
                    std::to_string((bytes / rec) * rec));
  }
  int64_t n = bytes / rec;
  int64_t hw = layout.height * layout.width;
  std::vector<double> pixels(n * hw * layout.channels);
  std::vector<int64_t> labels(n);
  std::vector<unsigned char> buf(rec);
  for (int64_t i = 0; i < n; ++i) {
    in.read(reinterpret_cast<char*>(buf.data()), rec);
    if (!in) throw DataError(path + ": short read at record " + std::to_string(i));
    int64_t label = buf[0];
    if (label >= layout.classes) {
      throw DataError(path + ": record " + std::to_string(i) + " has label " +
                      std::to_string(label) + " >= class count " +
                      std::to_string(layout.classes));
    }
    labels[i] = label;
    // channel-planar bytes -> interleaved [H, W, C] doubles in [0,1]
    for (int64_t c = 0; c < layout.channels; ++c) {
      const unsigned char* plane = buf.data() + 1 + c * hw;
      for (int64_t p = 0; p < hw; ++p) {
        pixels[(i * hw + p) * layout.channels + c] = plane[p] / 255.0;
      }
    }
  }
  Dataset ds;
  ds.images = Tensor::from({n, layout.height, layout.width, layout.channels},
                           std::move(pixels));
  ds.labels = std::move(labels);
  ds.class_count = layout.classes;
  ds.name = path;
  return ds;
}

namespace {

bool shape_mask(int64_t klass, double dx, double dy, double r) {
  double ax = std::abs(dx), ay = std::abs(dy);
  double rad = std::sqrt(dx * dx + dy * dy);
  switch (klass) {
    case 0:  // disk
      return rad <= r;
    case 1:  // square
      return ax <= r && ay <= r;
    case 2:  // upward triangle
      return dy >= -r && dy <= r && ax <= (dy + r) * 0.5;
    case 3:  // cross
      return (ax <= r / 3 && ay <= r) || (ay <= r / 3 && ax <= r);
    case 4:  // ring
      return rad <= r && rad >= r * 0.55;
    case 5:  // diamond
      return ax + ay <= r;
    case 6:  // horizontal bar
      return ay <= r / 3 && ax <= r;
    case 7:  // vertical bar
      return ax <= r / 3 && ay <= r;
    case 8:  // square frame
      return std::max(ax, ay) <= r && std::max(ax, ay) >= r * 0.55;
    case 9:  // four corner dots
      return std::min(std::hypot(ax - r * 0.6, ay - r * 0.6),
                      std::hypot(ax - r * 0.6, ay + r * 0.6)) <= r * 0.35 ||
             std::min(std::hypot(ax + r * 0.6, ay - r * 0.6),
                      std::hypot(ax + r * 0.6, ay + r * 0.6)) <= r * 0.35;
    default:
      return false;
  }
}

}  // namespace

Dataset synth_shapes(int64_t n, int64_t size, int64_t classes, uint64_t seed) {
  if (size < 16) throw DataError("synth_shapes: size must be >= 16");
  if (classes < 2 || classes > 10) {
    throw DataError("synth_shapes: classes must lie in 2..10");
  }
  Rng rng(seed);
  const int64_t channels = 3;
  std::vector<double> pixels(n * size * size * channels, 0.0);
  std::vector<int64_t> labels(n);
  for (int64_t i = 0; i < n; ++i) {
    int64_t klass = i % classes;  // balanced by construction
    labels[i] = klass;
    double cx = size * rng.uniform(0.40, 0.60);
    double cy = size * rng.uniform(0.40, 0.60);
    double r = size * rng.uniform(0.24, 0.36);
    double intensity = rng.uniform(0.55, 1.0);
    double* img = pixels.data() + i * size * size * channels;
    for (int64_t y = 0; y < size; ++y) {
      for (int64_t x = 0; x < size; ++x) {
        if (shape_mask(klass, x + 0.5 - cx, y + 0.5 - cy, r)) {
          double* px = img + (y * size + x) * channels;
          px[0] = px[1] = px[2] = intensity;
        }
      }
    }
  }
  Dataset ds;
  ds.images = Tensor::from({n, size, size, channels}, std::move(pixels));
  ds.labels = std::move(labels);
  ds.class_count = classes;
  ds.name = "synth_shapes";
  return ds;
}

Dataset add_gaussian_noise(const Dataset& ds, double sigma, uint64_t seed) {
  if (sigma < 0) throw DataError("add_gaussian_noise: sigma must be >= 0");
  Dataset out = ds;
  std::vector<double> pixels(ds.images.values().begin(),
                             ds.images.values().end());
  if (sigma > 0) {
    Rng rng(seed);
    for (double& p : pixels) p += rng.normal(0.0, sigma);
  }
  out.images = Tensor::from(ds.images.shape(), std::move(pixels));
  return out;
}

Dataset load_human_probs(const std::string& path, Dataset ds) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  int64_t n = ds.size();
  int64_t c = ds.class_count;
  std::vector<double> probs;
  probs.reserve(n * c);
  std::string line;
  int64_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (row >= n) {
      throw DataError(path + ": more rows than the dataset's " +
                      std::to_string(n) + " samples");
    }
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) {
      try {
        vals.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw DataError(path + ": row " + std::to_string(row) +
                        " has a non-numeric cell '" + cell + "'");
      }
    }
    if (static_cast<int64_t>(vals.size()) != c) {
      throw DataError(path + ": row " + std::to_string(row) + " has " +
                      std::to_string(vals.size()) + " values, expected " +
                      std::to_string(c));
    }
    double sum = 0;
    for (double v : vals) sum += v;
    if (std::abs(sum - 1.0) > 1e-3) {
      throw DataError(path + ": row " + std::to_string(row) + " sums to " +
                      std::to_string(sum) + ", outside 1 +/- 1e-3");
    }
    for (double v : vals) probs.push_back(v / sum);
    ++row;
  }
  if (row != n) {
    throw DataError(path + ": " + std::to_string(row) + " rows for " +
                    std::to_string(n) + " samples");
  }
  ds.human_probs = Tensor::from({n, c}, std::move(probs));
  return ds;
}

std::optional<double> pearson(std::span<const double> x,
                              std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3) {
    throw std::invalid_argument("pearson: need equal lengths >= 3");
  }
  double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, syy = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

Dataset take_subset(const Dataset& ds, std::span<const int64_t> indices) {
  Dataset out;
  out.class_count = ds.class_count;
  out.name = ds.name;
  out.images = batch_pixels(ds, indices);
  out.labels = batch_labels(ds, indices);
  if (ds.human_probs.defined()) {
    int64_t c = ds.class_count;
    std::vector<double> hp(indices.size() * c);
    auto src = ds.human_probs.values();
    for (size_t i = 0; i < indices.size(); ++i) {
      std::copy(src.data() + indices[i] * c, src.data() + (indices[i] + 1) * c,
                hp.data() + i * c);
    }
    out.human_probs =
        Tensor::from({static_cast<int64_t>(indices.size()), c}, std::move(hp));
  }
  return out;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double val_fraction,
                                          uint64_t seed) {
  if (val_fraction < 0.0 || val_fraction >= 1.0) {
    throw DataError("split: val_fraction must lie in [0,1)");
  }
  std::vector<int64_t> idx(ds.size());
  for (int64_t i = 0; i < ds.size(); ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);
  int64_t n_val = static_cast<int64_t>(std::llround(val_fraction * ds.size()));
  std::vector<int64_t> val_idx(idx.begin(), idx.begin() + n_val);
  std::vector<int64_t> train_idx(idx.begin() + n_val, idx.end());
  return {take_subset(ds, train_idx), take_subset(ds, val_idx)};
}

Tensor batch_pixels(const Dataset& ds, std::span<const int64_t> indices) {
  int64_t per = ds.height() * ds.width() * ds.channels();
  std::vector<double> out(indices.size() * per);
  auto src = ds.images.values();
  for (size_t i = 0; i < indices.size(); ++i) {
    int64_t j = indices[i];
    if (j < 0 || j >= ds.size()) {
      throw DataError("batch index " + std::to_string(j) + " out of range");
    }
    std::copy(src.data() + j * per, src.data() + (j + 1) * per,
              out.data() + i * per);
  }
  return Tensor::from({static_cast<int64_t>(indices.size()), ds.height(),
                       ds.width(), ds.channels()},
                      std::move(out));
}

std::vector<int64_t> batch_labels(const Dataset& ds,
                                  std::span<const int64_t> indices) {
  std::vector<int64_t> out(indices.size());
  for (size_t i = 0; i < indices.size(); ++i) out[i] = ds.labels[indices[i]];
  return out;
}

}  // namespace tricortex
