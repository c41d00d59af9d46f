#include "snnq/network.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "json.hpp"
#include "snnq/errors.hpp"
#include "snnq/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "weight files assume a little-endian host");

namespace snnq {

const char* to_string(LayerKind kind) {
  return kind == LayerKind::Dense ? "dense" : "conv2d";
}

const char* to_string(Activation act) {
  return act == Activation::Relu ? "relu" : "identity";
}

std::vector<int> LayerSpec::output_shape(
    const std::vector<int>& input_shape) const {
  if (kind == LayerKind::Dense) {
    std::size_t n = 1;
    for (int d : input_shape) n *= static_cast<std::size_t>(d);
    if (weights.rank() != 2 ||
        static_cast<std::size_t>(weights.dim(1)) != n) {
      throw DimensionError("dense weights " + shape_to_string(weights.shape()) +
                           " do not accept input " +
                           shape_to_string(input_shape));
    }
    return {weights.dim(0)};
  }
  if (input_shape.size() != 3) {
    throw DimensionError("conv2d layer needs a rank-3 input, got " +
                         shape_to_string(input_shape));
  }
  const Tensor probe(input_shape);
  const Tensor out = conv2d_forward(probe, weights, bias, stride);
  return out.shape();
}

Tensor LayerSpec::apply_linear(const Tensor& input) const {
  if (kind == LayerKind::Dense) {
    return input.rank() == 1 ? dense_forward(input, weights, bias)
                             : dense_forward(input.flattened(), weights, bias);
  }
  return conv2d_forward(input, weights, bias, stride);
}

void NetworkDescription::validate() const {
  if (layers.empty()) throw ValidationError("network has no layers");
  if (input_shape.empty()) throw ValidationError("network input shape unset");
  if (n_actions < 1) {
    throw ValidationError("network n_actions must be positive, got " +
                          std::to_string(n_actions));
  }
  std::vector<int> shape = input_shape;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerSpec& layer = layers[l];
    try {
      shape = layer.output_shape(shape);
    } catch (const DimensionError& e) {
      throw ValidationError("layer " + std::to_string(l) + ": " + e.what());
    }
    const bool last = l + 1 == layers.size();
    if (last && layer.activation != Activation::Identity) {
      throw ValidationError("output layer must use the identity activation");
    }
    if (!last && layer.activation != Activation::Relu) {
      throw ValidationError("hidden layer " + std::to_string(l) +
                            " must use the relu activation");
    }
    if (layer.kind == LayerKind::Dense && layer.stride != 1) {
      throw ValidationError("dense layer " + std::to_string(l) +
                            " must have stride 1");
    }
  }
  if (shape.size() != 1 || shape[0] != n_actions) {
    throw ValidationError("network output shape " + shape_to_string(shape) +
                          " does not match n_actions " +
                          std::to_string(n_actions));
  }
}

Tensor ann_forward(const NetworkDescription& net, const Tensor& observation) {
  Tensor x = observation;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    x = net.layers[l].apply_linear(x);
    if (net.layers[l].activation == Activation::Relu) {
      for (auto& v : x.values()) {
        if (v < 0.0f) v = 0.0f;
      }
    }
  }
  return x;
}

std::vector<Tensor> ann_forward_layers(const NetworkDescription& net,
                                       const Tensor& observation) {
  std::vector<Tensor> acts;
  acts.reserve(net.layers.size());
  const Tensor* x = &observation;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    Tensor y = net.layers[l].apply_linear(*x);
    if (net.layers[l].activation == Activation::Relu) {
      for (auto& v : y.values()) {
        if (v < 0.0f) v = 0.0f;
      }
    }
    acts.push_back(std::move(y));
    x = &acts.back();
  }
  return acts;
}

namespace {

Tensor he_normal(std::vector<int> shape, std::size_t fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (auto& v : t.values()) {
    v = static_cast<float>(stddev * normal01(rng));
  }
  return t;
}

LayerSpec dense_layer(int out_n, int in_n, Activation act, Rng& rng) {
  LayerSpec layer;
  layer.kind = LayerKind::Dense;
  layer.weights = he_normal({out_n, in_n}, static_cast<std::size_t>(in_n), rng);
  layer.bias = Tensor({out_n});
  layer.activation = act;
  return layer;
}

LayerSpec conv_layer(int k, int c, int kh, int kw, int stride, Rng& rng) {
  LayerSpec layer;
  layer.kind = LayerKind::Conv2d;
  layer.weights = he_normal({k, c, kh, kw},
                            static_cast<std::size_t>(c) *
                                static_cast<std::size_t>(kh) *
                                static_cast<std::size_t>(kw),
                            rng);
  layer.bias = Tensor({k});
  layer.stride = stride;
  layer.activation = Activation::Relu;
  return layer;
}

}  // namespace

NetworkDescription make_shallow_preset(int n_actions, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  NetworkDescription net;
  net.input_shape = {6400};
  net.n_actions = n_actions;
  net.layers.push_back(dense_layer(1000, 6400, Activation::Relu, rng));
  net.layers.push_back(dense_layer(n_actions, 1000, Activation::Identity, rng));
  net.validate();
  return net;
}

NetworkDescription make_deep_preset(int n_actions, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  NetworkDescription net;
  net.input_shape = {4, 84, 84};
  net.n_actions = n_actions;
  net.layers.push_back(conv_layer(32, 4, 8, 8, 4, rng));
  net.layers.push_back(conv_layer(64, 32, 4, 4, 2, rng));
  net.layers.push_back(conv_layer(64, 64, 3, 3, 1, rng));
  net.layers.push_back(dense_layer(512, 64 * 7 * 7, Activation::Relu, rng));
  net.layers.push_back(dense_layer(n_actions, 512, Activation::Identity, rng));
  net.validate();
  return net;
}

namespace {

constexpr char kB64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const float* values, std::size_t count) {
  const auto* bytes = reinterpret_cast<const unsigned char*>(values);
  const std::size_t n = count * sizeof(float);
  std::string out;
  out.reserve((n + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= n; i += 3) {
    const unsigned v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kB64Alphabet[(v >> 18) & 63];
    out += kB64Alphabet[(v >> 12) & 63];
    out += kB64Alphabet[(v >> 6) & 63];
    out += kB64Alphabet[v & 63];
  }
  const std::size_t rest = n - i;
  if (rest == 1) {
    const unsigned v = bytes[i] << 16;
    out += kB64Alphabet[(v >> 18) & 63];
    out += kB64Alphabet[(v >> 12) & 63];
    out += "==";
  } else if (rest == 2) {
    const unsigned v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kB64Alphabet[(v >> 18) & 63];
    out += kB64Alphabet[(v >> 12) & 63];
    out += kB64Alphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

int b64_value(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

std::vector<float> base64_decode_floats(const std::string& text,
                                        const std::string& what) {
  std::vector<unsigned char> bytes;
  bytes.reserve(text.size() / 4 * 3);
  unsigned acc = 0;
  int bits = 0;
  for (char c : text) {
    if (c == '=') break;
    const int v = b64_value(c);
    if (v < 0) {
      throw ParseError("invalid base64 character in " + what);
    }
    acc = (acc << 6) | static_cast<unsigned>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      bytes.push_back(static_cast<unsigned char>((acc >> bits) & 0xff));
    }
  }
  if (bytes.size() % sizeof(float) != 0) {
    throw ParseError("base64 payload in " + what +
                     " is not a whole number of float32 values");
  }
  std::vector<float> out(bytes.size() / sizeof(float));
  std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

nlohmann::json tensor_to_json(const Tensor& t) {
  return {{"shape", t.shape()}, {"data", base64_encode(t.data(), t.size())}};
}

Tensor tensor_from_json(const nlohmann::json& j, const std::string& what) {
  if (!j.is_object() || !j.contains("shape") || !j.contains("data")) {
    throw ValidationError(what + " must be an object with shape and data");
  }
  std::vector<int> shape = j.at("shape").get<std::vector<int>>();
  std::vector<float> data =
      base64_decode_floats(j.at("data").get<std::string>(), what);
  try {
    return Tensor(std::move(shape), std::move(data));
  } catch (const DimensionError& e) {
    throw ValidationError(what + ": " + e.what());
  }
}

constexpr int kWeightsFormatVersion = 1;

}  // namespace

void save_weights(const NetworkDescription& net, const std::string& path) {
  net.validate();
  nlohmann::json doc;
  doc["format_version"] = kWeightsFormatVersion;
  doc["input_shape"] = net.input_shape;
  doc["n_actions"] = net.n_actions;
  doc["layers"] = nlohmann::json::array();
  for (const LayerSpec& layer : net.layers) {
    nlohmann::json jl;
    jl["kind"] = to_string(layer.kind);
    jl["activation"] = to_string(layer.activation);
    jl["stride"] = layer.stride;
    jl["weights"] = tensor_to_json(layer.weights);
    jl["bias"] = tensor_to_json(layer.bias);
    doc["layers"].push_back(std::move(jl));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  out << doc.dump(1) << '\n';
  if (!out) throw ValidationError("failed writing weights to '" + path + "'");
}

NetworkDescription load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open weights file '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("weights file '" + path + "': " + e.what());
  }

  if (!doc.is_object() || !doc.contains("format_version")) {
    throw ValidationError("weights file '" + path +
                          "' lacks a format_version field");
  }
  if (doc.at("format_version").get<int>() != kWeightsFormatVersion) {
    throw ValidationError("weights file '" + path +
                          "' has unsupported format_version " +
                          doc.at("format_version").dump());
  }

  NetworkDescription net;
  try {
    net.input_shape = doc.at("input_shape").get<std::vector<int>>();
    net.n_actions = doc.at("n_actions").get<int>();
    for (std::size_t l = 0; l < doc.at("layers").size(); ++l) {
      const nlohmann::json& jl = doc.at("layers").at(l);
      const std::string tag = "layer " + std::to_string(l);
      LayerSpec layer;
      const std::string kind = jl.at("kind").get<std::string>();
      if (kind == "dense") {
        layer.kind = LayerKind::Dense;
      } else if (kind == "conv2d") {
        layer.kind = LayerKind::Conv2d;
      } else {
        throw ValidationError(tag + " has unknown kind '" + kind + "'");
      }
      const std::string act = jl.at("activation").get<std::string>();
      if (act == "relu") {
        layer.activation = Activation::Relu;
      } else if (act == "identity") {
        layer.activation = Activation::Identity;
      } else {
        throw ValidationError(tag + " has unknown activation '" + act + "'");
      }
      layer.stride = jl.at("stride").get<int>();
      layer.weights = tensor_from_json(jl.at("weights"), tag + " weights");
      layer.bias = tensor_from_json(jl.at("bias"), tag + " bias");
      net.layers.push_back(std::move(layer));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("weights file '" + path + "': " + e.what());
  }
  try {
    net.validate();
  } catch (const ValidationError& e) {
    throw ValidationError("weights file '" + path + "': " + e.what());
  }
  return net;
}

}  // namespace snnq
