#pragma once

#include "minlgan/error.hpp"
#include "minlgan/nets.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>

namespace minlgan {

enum class Method { gan, minlgan, ae, vae };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::gan: return "gan";
    case Method::minlgan: return "minlgan";
    case Method::ae: return "ae";
    case Method::vae: return "vae";
  }
  return "gan";
}

inline Method parse_method(std::string_view s) {
  for (auto m : {Method::gan, Method::minlgan, Method::ae, Method::vae})
    if (to_string(m) == s) return m;
  throw InvalidArgument("unknown method '" + std::string(s) + "'");
}

inline bool is_adversarial(Method m) { return m == Method::gan || m == Method::minlgan; }

// Networks of one GAN / MinLGAN run. The encoder is idle for the plain GAN.
struct AdversarialNets {
  Generator g;
  Discriminator d;
  Encoder e;
};

using Model = std::variant<AdversarialNets, AutoEncoder, Vae>;

struct Checkpoint {
  Method method = Method::minlgan;
  Model model;
  NoiseModel noise;
  std::uint64_t seed = 0;
  std::int64_t step = 0;
};

// Self-describing JSON: network specs, flat parameter arrays, seed and step. Doubles are
// written in shortest round-trip form, so save/load is bit-exact.
namespace checkpoint {

using nlohmann::json;

inline constexpr int kFormatVersion = 1;

inline json spec_to_json(const NetworkSpec& s) {
  return {{"widths", s.widths},
          {"activation", to_string(s.activation)},
          {"output_activation", to_string(s.output_activation)},
          {"feature_layer", s.feature_layer}};
}

inline NetworkSpec spec_from_json(const json& j) {
  NetworkSpec s;
  s.widths = j.at("widths").get<std::vector<Eigen::Index>>();
  s.activation = parse_activation(j.at("activation").get<std::string>());
  s.output_activation = parse_activation(j.at("output_activation").get<std::string>());
  s.feature_layer = j.at("feature_layer").get<int>();
  s.validate();
  return s;
}

inline json mlp_to_json(const Mlp& m) {
  const Vector flat = flatten(m.layers);
  return {{"spec", spec_to_json(m.spec)}, {"params", std::vector<double>(flat.data(), flat.data() + flat.size())}};
}

inline Mlp mlp_from_json(const json& j) {
  Mlp m = make_mlp(spec_from_json(j.at("spec")));
  const auto values = j.at("params").get<std::vector<double>>();
  unflatten(Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size())), m.layers);
  return m;
}

inline json to_json(const Checkpoint& c) {
  json nets;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, AdversarialNets>) {
          nets = {{"generator", mlp_to_json(m.g.net)},
                  {"discriminator", mlp_to_json(m.d.net)},
                  {"encoder", mlp_to_json(m.e.net)}};
        } else if constexpr (std::is_same_v<T, AutoEncoder>) {
          nets = {{"encoder", mlp_to_json(m.encoder)}, {"decoder", mlp_to_json(m.decoder)}};
        } else {
          nets = {{"encoder", mlp_to_json(m.encoder.net)}, {"decoder", mlp_to_json(m.decoder)}};
        }
      },
      c.model);
  return {{"format", "minlgan-checkpoint"},
          {"version", kFormatVersion},
          {"method", to_string(c.method)},
          {"noise", {{"family", to_string(c.noise.family)}, {"sigma", c.noise.sigma}}},
          {"seed", c.seed},
          {"step", c.step},
          {"networks", nets}};
}

inline Checkpoint from_json(const json& j) {
  try {
    if (j.at("format") != "minlgan-checkpoint" || j.at("version") != kFormatVersion)
      throw SchemaError("not a version-1 checkpoint");
    Checkpoint c;
    c.method = parse_method(j.at("method").get<std::string>());
    c.noise.family = parse_noise_family(j.at("noise").at("family").get<std::string>());
    c.noise.sigma = j.at("noise").at("sigma").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.step = j.at("step").get<std::int64_t>();
    const auto& nets = j.at("networks");
    switch (c.method) {
      case Method::gan:
      case Method::minlgan:
        c.model = AdversarialNets{Generator{mlp_from_json(nets.at("generator"))},
                                  Discriminator{mlp_from_json(nets.at("discriminator"))},
                                  Encoder{mlp_from_json(nets.at("encoder"))}};
        break;
      case Method::ae:
        c.model = AutoEncoder{mlp_from_json(nets.at("encoder")), mlp_from_json(nets.at("decoder"))};
        break;
      case Method::vae:
        c.model = Vae{Encoder{mlp_from_json(nets.at("encoder"))}, mlp_from_json(nets.at("decoder"))};
        break;
    }
    return c;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed checkpoint: ") + e.what());
  }
}

inline void save(const Checkpoint& c, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  os << to_json(c).dump() << '\n';
  if (!os) throw IoError("failed writing " + path.string());
}

inline Checkpoint load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  return from_json(j);
}

}  // namespace checkpoint
}  // namespace minlgan
