/*
 * Copyright 2026 The ToFu Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "tofu/weights_io.hpp"

#include <map>
#include <string>

#include "byte_io.hpp"
#include "tofu/json_io.hpp"

namespace tofu {

namespace {

struct RawTensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;
};

class TensorWriter {
 public:
  void add(const std::string& name, const RowMatrixf& m) {
    RawTensor t{{static_cast<std::uint32_t>(m.rows()),
                 static_cast<std::uint32_t>(m.cols())},
                std::vector<float>(m.data(), m.data() + m.size())};
    entries_.push_back(Entry{name, std::move(t)});
  }
  void add(const std::string& name, const Vector<float>& v) {
    RawTensor t{{static_cast<std::uint32_t>(v.size())},
                std::vector<float>(v.data(), v.data() + v.size())};
    entries_.push_back(Entry{name, std::move(t)});
  }

  std::vector<std::uint8_t> finish(const std::string& config) {
    detail::ByteWriter w;
    w.text("TFW1");
    w.u32(static_cast<std::uint32_t>(entries_.size()));
    for (const auto& e : entries_) {
      w.u16(static_cast<std::uint16_t>(e.name.size()));
      w.text(e.name);
      w.u8(static_cast<std::uint8_t>(e.tensor.dims.size()));
      for (auto d : e.tensor.dims) w.u32(d);
      w.f32s(e.tensor.data);
    }
    w.u32(static_cast<std::uint32_t>(config.size()));
    w.text(config);
    return w.take();
  }

 private:
  struct Entry {
    std::string name;
    RawTensor tensor;
  };
  std::vector<Entry> entries_;
};

class TensorTable {
 public:
  explicit TensorTable(std::map<std::string, RawTensor> t)
      : tensors_(std::move(t)) {}

  RowMatrixf matrix(const std::string& name, Index rows, Index cols) {
    RawTensor t = take(name);
    if (t.dims.size() != 2 || t.dims[0] != rows || t.dims[1] != cols) {
      throw ShapeMismatchError("TFW1: tensor " + name +
                               " does not have shape " +
                               shape_string(rows, cols));
    }
    return Eigen::Map<const RowMatrixf>(t.data.data(), rows, cols);
  }
  Vector<float> vector(const std::string& name, Index size) {
    RawTensor t = take(name);
    if (t.dims.size() != 1 || t.dims[0] != size) {
      throw ShapeMismatchError("TFW1: tensor " + name +
                               " does not have length " +
                               std::to_string(size));
    }
    return Eigen::Map<const Vector<float>>(t.data.data(), size);
  }
  bool has(const std::string& name) const { return tensors_.contains(name); }
  void expect_empty() const {
    if (!tensors_.empty()) {
      throw ShapeMismatchError("TFW1: unexpected tensor " +
                               tensors_.begin()->first);
    }
  }

 private:
  RawTensor take(const std::string& name) {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) {
      throw ShapeMismatchError("TFW1: missing tensor " + name);
    }
    RawTensor t = std::move(it->second);
    tensors_.erase(it);
    return t;
  }
  std::map<std::string, RawTensor> tensors_;
};

std::string block_prefix(std::size_t l) {
  return "blocks." + std::to_string(l) + ".";
}

}  // namespace

std::vector<std::uint8_t> encode_weights(const VitModel<float>& model) {
  TensorWriter w;
  for (std::size_t l = 0; l < model.blocks.size(); ++l) {
    const auto& b = model.blocks[l];
    const std::string p = block_prefix(l);
    w.add(p + "attn.qkv.weight", b.qkv_weight);
    w.add(p + "attn.qkv.bias", b.qkv_bias);
    w.add(p + "attn.proj.weight", b.proj_weight);
    w.add(p + "attn.proj.bias", b.proj_bias);
    w.add(p + "norm1.gamma", b.norm1_gamma);
    w.add(p + "norm1.beta", b.norm1_beta);
    w.add(p + "mlp.fc1.weight", b.fc1_weight);
    w.add(p + "mlp.fc1.bias", b.fc1_bias);
    w.add(p + "mlp.fc2.weight", b.fc2_weight);
    w.add(p + "mlp.fc2.bias", b.fc2_bias);
    w.add(p + "norm2.gamma", b.norm2_gamma);
    w.add(p + "norm2.beta", b.norm2_beta);
  }
  if (model.head) {
    w.add("norm.gamma", model.head->norm_gamma);
    w.add("norm.beta", model.head->norm_beta);
    w.add("head.weight", model.head->weight);
    w.add("head.bias", model.head->bias);
  }
  return w.finish(to_json(model.config).dump());
}

VitModel<float> decode_weights(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, "TFW1");
  r.expect_magic("TFW1");
  const std::uint32_t count = r.u32();
  std::map<std::string, RawTensor> tensors;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.text(r.u16());
    RawTensor t;
    const std::uint8_t ndim = r.u8();
    std::size_t n = 1;
    for (std::uint8_t d = 0; d < ndim; ++d) {
      const std::uint32_t dim = r.u32();
      if (dim != 0 && n > bytes.size() / dim) {
        throw TruncationError("TFW1: tensor " + name +
                                  " is larger than the file",
                              r.position());
      }
      t.dims.push_back(dim);
      n *= dim;
    }
    t.data = r.f32s(n);
    if (!tensors.emplace(name, std::move(t)).second) {
      throw FormatError("TFW1: duplicate tensor " + name);
    }
  }
  const std::string config_text = r.text(r.u32());
  if (r.remaining() != 0) {
    throw FormatError("TFW1: " + std::to_string(r.remaining()) +
                      " trailing bytes after config at byte " +
                      std::to_string(r.position()));
  }
  Json config_json;
  try {
    config_json = Json::parse(config_text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("TFW1: config blob is not JSON: ") +
                      e.what());
  }
  VitModel<float> model;
  try {
    model.config = vit_config_from_json(config_json);
  } catch (const Error& e) {
    throw FormatError(std::string("TFW1: bad config: ") + e.what());
  }

  const VitConfig& cfg = model.config;
  const Index c = cfg.channels, h = cfg.hidden();
  TensorTable table(std::move(tensors));
  for (Index l = 0; l < cfg.depth; ++l) {
    const std::string p = block_prefix(static_cast<std::size_t>(l));
    BlockWeights<float> b;
    b.qkv_weight = table.matrix(p + "attn.qkv.weight", c, 3 * c);
    b.qkv_bias = table.vector(p + "attn.qkv.bias", 3 * c);
    b.proj_weight = table.matrix(p + "attn.proj.weight", c, c);
    b.proj_bias = table.vector(p + "attn.proj.bias", c);
    b.norm1_gamma = table.vector(p + "norm1.gamma", c);
    b.norm1_beta = table.vector(p + "norm1.beta", c);
    b.fc1_weight = table.matrix(p + "mlp.fc1.weight", c, h);
    b.fc1_bias = table.vector(p + "mlp.fc1.bias", h);
    b.fc2_weight = table.matrix(p + "mlp.fc2.weight", h, c);
    b.fc2_bias = table.vector(p + "mlp.fc2.bias", c);
    b.norm2_gamma = table.vector(p + "norm2.gamma", c);
    b.norm2_beta = table.vector(p + "norm2.beta", c);
    model.blocks.push_back(std::move(b));
  }
  if (table.has("head.weight")) {
    if (cfg.num_classes < 1) {
      throw ShapeMismatchError("TFW1: head tensors present but num_classes is 0");
    }
    HeadWeights<float> head;
    head.norm_gamma = table.vector("norm.gamma", c);
    head.norm_beta = table.vector("norm.beta", c);
    head.weight = table.matrix("head.weight", c, cfg.num_classes);
    head.bias = table.vector("head.bias", cfg.num_classes);
    model.head = std::move(head);
  } else if (cfg.num_classes > 0) {
    throw ShapeMismatchError("TFW1: config declares " +
                             std::to_string(cfg.num_classes) +
                             " classes but has no head tensors");
  }
  table.expect_empty();
  return model;
}

void save_weights(const std::filesystem::path& path,
                  const VitModel<float>& model) {
  detail::write_file(path, encode_weights(model));
}

VitModel<float> load_weights(const std::filesystem::path& path) {
  return decode_weights(detail::read_file(path));
}

}  // namespace tofu
