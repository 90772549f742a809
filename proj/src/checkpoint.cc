/*
Copyright 2026 The detpaint Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS-IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "detpaint/training.h"

namespace detpaint::training {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'D', 'P', 'C', 'K', 'P', 'T', '\0', '\1'};

template <typename T>
void Append(std::vector<std::uint8_t>* out, const T& value) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
  out->insert(out->end(), p, p + sizeof(T));
}

template <typename T>
T Take(std::span<const std::uint8_t> bytes, std::size_t* offset) {
  if (*offset + sizeof(T) > bytes.size()) {
    throw IoError("checkpoint truncated");
  }
  T value;
  std::memcpy(&value, bytes.data() + *offset, sizeof(T));
  *offset += sizeof(T);
  return value;
}

void CheckSection(const CheckpointSection& section,
                  const nn::ParamSet& expected) {
  if (!section.tensors.SameLayout(expected)) {
    // Name the first offending tensor.
    const auto& got = section.tensors.entries();
    const auto& want = expected.entries();
    for (std::size_t i = 0; i < want.size(); ++i) {
      if (i >= got.size()) {
        throw ValidationError("checkpoint section '" + section.name +
                              "' is missing tensor " + want[i].name);
      }
      if (got[i].name != want[i].name ||
          !got[i].value.SameShape(want[i].value)) {
        throw ValidationError(
            "checkpoint section '" + section.name + "': tensor " +
            got[i].name + " " + got[i].value.ShapeString() +
            " does not match expected " + want[i].name + " " +
            want[i].value.ShapeString());
      }
    }
    throw ValidationError("checkpoint section '" + section.name +
                          "' has unexpected extra tensors");
  }
}

const CheckpointSection& Require(const Checkpoint& ckpt,
                                 const std::string& name) {
  const CheckpointSection* s = ckpt.Find(name);
  if (s == nullptr) {
    throw ValidationError("checkpoint has no section '" + name + "'");
  }
  return *s;
}

}  // namespace

const CheckpointSection* Checkpoint::Find(const std::string& name) const {
  for (const auto& s : sections) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

std::vector<std::uint8_t> SerializeCheckpoint(const Checkpoint& ckpt) {
  nlohmann::json header = {{"format_version", kCheckpointVersion},
                           {"config", ckpt.config},
                           {"seed", ckpt.seed},
                           {"step", ckpt.step},
                           {"data_seed", ckpt.data_seed}};
  nlohmann::json sections = nlohmann::json::array();
  for (const auto& s : ckpt.sections) {
    nlohmann::json tensors = nlohmann::json::array();
    for (const auto& t : s.tensors.entries()) {
      tensors.push_back({{"name", t.name}, {"shape", t.value.shape()}});
    }
    sections.push_back(
        {{"name", s.name}, {"adam_step", s.adam_step}, {"tensors", tensors}});
  }
  header["sections"] = std::move(sections);
  const std::string text = header.dump();

  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  Append(&out, kCheckpointVersion);
  Append(&out, static_cast<std::uint64_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& s : ckpt.sections) {
    for (const auto& t : s.tensors.entries()) {
      const auto* p = reinterpret_cast<const std::uint8_t*>(t.value.data());
      out.insert(out.end(), p, p + t.value.size() * sizeof(double));
    }
  }
  return out;
}

Checkpoint DeserializeCheckpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof(kMagic) ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw IoError("not a detpaint checkpoint (bad magic)");
  }
  std::size_t offset = sizeof(kMagic);
  const auto version = Take<std::uint32_t>(bytes, &offset);
  if (version != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = Take<std::uint64_t>(bytes, &offset);
  if (offset + header_len > bytes.size()) throw IoError("checkpoint truncated");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + offset,
                                   bytes.begin() + offset + header_len);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("corrupt checkpoint header: ") + e.what());
  }
  offset += header_len;

  Checkpoint ckpt;
  try {
    ckpt.config = header.at("config");
    ckpt.seed = header.at("seed").get<std::uint64_t>();
    ckpt.step = header.at("step").get<std::int64_t>();
    ckpt.data_seed = header.at("data_seed").get<std::uint64_t>();
    for (const auto& s : header.at("sections")) {
      CheckpointSection section;
      section.name = s.at("name").get<std::string>();
      section.adam_step = s.at("adam_step").get<std::int64_t>();
      for (const auto& t : s.at("tensors")) {
        const auto shape = t.at("shape").get<std::vector<int>>();
        if (shape.size() != 4) throw IoError("checkpoint tensor is not 4-D");
        Tensor value(shape[0], shape[1], shape[2], shape[3]);
        const std::size_t nbytes = value.size() * sizeof(double);
        if (offset + nbytes > bytes.size()) throw IoError("checkpoint truncated");
        std::memcpy(value.data(), bytes.data() + offset, nbytes);
        offset += nbytes;
        section.tensors.Add(t.at("name").get<std::string>(), std::move(value));
      }
      ckpt.sections.push_back(std::move(section));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("corrupt checkpoint header: ") + e.what());
  }
  if (offset != bytes.size()) throw IoError("checkpoint has trailing bytes");
  return ckpt;
}

void SaveCheckpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = SerializeCheckpoint(ckpt);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return DeserializeCheckpoint(bytes);
}

std::string CriticSectionName(Mode mode) {
  switch (mode) {
    case Mode::kDet:
      return "detector";
    case Mode::kAdv:
      return "discriminator";
    case Mode::kWeight:
      return "";
  }
  return "";
}

Checkpoint ToCheckpoint(const TrainConfig& config, const TrainState& state) {
  Checkpoint ckpt;
  ckpt.config = ConfigToJson(config);
  ckpt.seed = config.seed;
  ckpt.step = state.step;
  ckpt.data_seed = state.data_seed;
  auto add = [&](const std::string& name, const nn::ParamSet& params,
                 const nn::AdamState& adam) {
    ckpt.sections.push_back({name, adam.step, params});
    ckpt.sections.push_back({name + ".adam_m", adam.step, adam.m});
    ckpt.sections.push_back({name + ".adam_v", adam.step, adam.v});
  };
  add("generator", state.generator, state.generator_adam);
  const std::string critic = CriticSectionName(config.mode);
  if (!critic.empty()) add(critic, state.critic, state.critic_adam);
  return ckpt;
}

TrainConfig ConfigFromCheckpoint(const Checkpoint& ckpt) {
  return ConfigFromJson(ckpt.config);
}

TrainState StateFromCheckpoint(const Checkpoint& ckpt,
                               const TrainConfig& config) {
  const Trainer trainer(config);
  const GeneratorParams gen_layout = trainer.generator().network().ZeroParams();
  TrainState state;
  state.step = ckpt.step;
  state.data_seed = ckpt.data_seed;

  auto load = [&](const std::string& name, const nn::ParamSet& layout,
                  nn::ParamSet* params, nn::AdamState* adam) {
    const CheckpointSection& p = Require(ckpt, name);
    const CheckpointSection& m = Require(ckpt, name + ".adam_m");
    const CheckpointSection& v = Require(ckpt, name + ".adam_v");
    CheckSection(p, layout);
    CheckSection(m, layout);
    CheckSection(v, layout);
    *params = p.tensors;
    adam->m = m.tensors;
    adam->v = v.tensors;
    adam->step = p.adam_step;
  };
  load("generator", gen_layout, &state.generator, &state.generator_adam);
  const std::string critic = CriticSectionName(config.mode);
  if (!critic.empty()) {
    load(critic, trainer.critic().network().ZeroParams(), &state.critic,
         &state.critic_adam);
  }
  return state;
}

}  // namespace detpaint::training
