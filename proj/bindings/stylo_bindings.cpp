#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "stylo/adapters.hpp"
#include "stylo/gridsoccer.hpp"
#include "stylo/policy_net.hpp"
#include "stylo/population.hpp"
#include "stylo/serialize.hpp"
#include "stylo/stylelab.hpp"
#include "stylo/tensor.hpp"
#include "stylo/trainer.hpp"

namespace py = pybind11;
using namespace stylo;

namespace {

Tensor tensor_from_array(const py::array_t<float, py::array::c_style | py::array::forcecast>& a) {
  std::vector<int> shape;
  for (py::ssize_t i = 0; i < a.ndim(); ++i) shape.push_back(static_cast<int>(a.shape(i)));
  Tensor t(shape);
  std::copy(a.data(), a.data() + a.size(), t.data.begin());
  return t;
}

py::array_t<float> array_from_tensor(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape.begin(), t.shape.end());
  py::array_t<float> a(shape);
  std::copy(t.data.begin(), t.data.end(), a.mutable_data());
  return a;
}

// Fresh or checkpointed network plus its parameter store.
struct Model {
  TrainedModel inner;

  Model(const NetConfig& cfg, uint64_t seed) : inner(cfg, seed) {}
  explicit Model(TrainedModel&& m) : inner(std::move(m)) {}

  py::array_t<float> logits(
      const py::array_t<float, py::array::c_style | py::array::forcecast>& states,
      const py::object& style) const {
    Tensor x = tensor_from_array(states);
    if (x.shape.size() == 1) x.shape = {1, x.shape[0]};
    if (style.is_none()) return array_from_tensor(inner.net.forward(inner.store, nullptr, x));
    const Tensor z = tensor_from_array(style.cast<py::array_t<float>>());
    return array_from_tensor(inner.net.forward(inner.store, &z, x));
  }
};

}  // namespace

PYBIND11_MODULE(_stylo, m) {
  m.doc() = "Style-vector behavioral cloning: routed low-rank adapters on a toy grid game";

  m.def("softmax", [](const py::array_t<float>& logits) {
    return array_from_tensor(softmax(tensor_from_array(logits)));
  });
  m.def("cross_entropy_loss", [](const py::array_t<float>& logits, const std::vector<int>& labels) {
    return cross_entropy_loss(tensor_from_array(logits), labels);
  });
  m.def("matmul", [](const py::array_t<float>& a, const py::array_t<float>& b) {
    return array_from_tensor(matmul(tensor_from_array(a), tensor_from_array(b)));
  });
  m.def("cosine_similarity", [](const py::array_t<float>& u, const py::array_t<float>& v) {
    return cosine_similarity(tensor_from_array(u), tensor_from_array(v));
  });

  m.def(
      "mix_poly",
      [](const std::vector<std::pair<py::array_t<float>, py::array_t<float>>>& modules,
         const py::array_t<float>& logits) {
        AdapterInventory inv;
        for (const auto& [a, b] : modules) {
          inv.modules.push_back({tensor_from_array(a), tensor_from_array(b)});
        }
        const LoraPair mixed = mix_poly(inv, tensor_from_array(logits));
        return std::pair{array_from_tensor(mixed.a), array_from_tensor(mixed.b)};
      },
      py::arg("modules"), py::arg("logits"),
      "Poly mixing of [(a, b)] adapter pairs under softmax(logits)");
  m.def(
      "mix_mhr",
      [](const std::vector<std::pair<py::array_t<float>, py::array_t<float>>>& modules,
         const py::array_t<float>& logits) {
        AdapterInventory inv;
        for (const auto& [a, b] : modules) {
          inv.modules.push_back({tensor_from_array(a), tensor_from_array(b)});
        }
        const LoraPair mixed = mix_mhr(inv, tensor_from_array(logits));
        return std::pair{array_from_tensor(mixed.a), array_from_tensor(mixed.b)};
      },
      py::arg("modules"), py::arg("logits"),
      "Multi-head mixing; logits shape [modules x heads]");
  m.def("style_delta", [](const std::vector<py::array_t<float>>& top,
                          const std::vector<py::array_t<float>>& population) {
    std::vector<Tensor> top_t, pop_t;
    for (const auto& a : top) top_t.push_back(tensor_from_array(a));
    for (const auto& a : population) pop_t.push_back(tensor_from_array(a));
    std::vector<const Tensor*> top_p, pop_p;
    for (const auto& t : top_t) top_p.push_back(&t);
    for (const auto& t : pop_t) pop_p.push_back(&t);
    return array_from_tensor(style_delta(top_p, pop_p).delta);
  });

  py::enum_<Side>(m, "Side").value("L", Side::L).value("R", Side::R);
  py::enum_<Winner>(m, "Winner")
      .value("L", Winner::L)
      .value("R", Winner::R)
      .value("DRAW", Winner::Draw)
      .value("NONE", Winner::None);
  py::enum_<Action>(m, "Action")
      .value("STAY", Action::Stay)
      .value("MOVE_N", Action::MoveN)
      .value("MOVE_S", Action::MoveS)
      .value("MOVE_E", Action::MoveE)
      .value("MOVE_W", Action::MoveW)
      .value("KICK_N", Action::KickN)
      .value("KICK_S", Action::KickS)
      .value("KICK_E", Action::KickE)
      .value("KICK_W", Action::KickW);

  py::class_<GameState>(m, "GameState")
      .def_readonly("width", &GameState::width)
      .def_readonly("height", &GameState::height)
      .def_readonly("bx", &GameState::bx)
      .def_readonly("by", &GameState::by)
      .def_readonly("side_to_move", &GameState::side_to_move)
      .def_readonly("ply", &GameState::ply)
      .def_readonly("terminal", &GameState::terminal)
      .def_readonly("winner", &GameState::winner)
      .def_property_readonly("agents",
                             [](const GameState& s) {
                               return std::vector<std::pair<int, int>>{{s.ax[0], s.ay[0]},
                                                                       {s.ax[1], s.ay[1]}};
                             })
      .def("__repr__", [](const GameState& s) {
        return "<GameState ply=" + std::to_string(s.ply) +
               " terminal=" + (s.terminal ? std::string("True") : std::string("False")) + ">";
      });

  py::class_<StyleParams>(m, "StyleParams")
      .def(py::init([](float chase, float goal_push, float defend, float kick, float temperature) {
             return StyleParams{chase, goal_push, defend, kick, temperature};
           }),
           py::arg("chase_weight") = 0.0f, py::arg("goal_push_weight") = 0.0f,
           py::arg("defend_weight") = 0.0f, py::arg("kick_bias") = 0.0f,
           py::arg("temperature") = 1.0f)
      .def_readwrite("chase_weight", &StyleParams::chase_weight)
      .def_readwrite("goal_push_weight", &StyleParams::goal_push_weight)
      .def_readwrite("defend_weight", &StyleParams::defend_weight)
      .def_readwrite("kick_bias", &StyleParams::kick_bias)
      .def_readwrite("temperature", &StyleParams::temperature);

  m.def("initial_state", &initial_state, py::arg("width") = 9, py::arg("height") = 7);
  m.def("mirror", &mirror);
  m.def("legal_actions", &legal_actions);
  m.def("apply_action", &apply_action);
  m.def("encode_state", [](const GameState& s, Side perspective) {
    const auto f = encode_state(s, perspective);
    return std::vector<float>(f.begin(), f.end());
  });
  m.def("to_frame_action", &to_frame_action);
  m.def("from_frame_action", &from_frame_action);
  m.def(
      "play_match_scripted",
      [](const StyleParams& l, const StyleParams& r, uint64_t seed) {
        const Policy pl = [&l](const GameState& s) { return scripted_policy(l, s); };
        const Policy pr = [&r](const GameState& s) { return scripted_policy(r, s); };
        const MatchResult match = play_match(pl, pr, seed);
        std::vector<std::tuple<int, Side, Action>> moves;
        for (const auto& rec : match.trajectory) moves.push_back({rec.ply, rec.side, rec.action});
        return std::tuple{match.winner, match.plies, moves};
      },
      py::arg("left"), py::arg("right"), py::arg("seed"),
      "Returns (winner, plies, [(ply, side, action)])");

  py::class_<NetConfig>(m, "NetConfig")
      .def(py::init<>())
      .def_readwrite("input_dim", &NetConfig::input_dim)
      .def_readwrite("width", &NetConfig::width)
      .def_readwrite("blocks", &NetConfig::blocks)
      .def_readwrite("hidden", &NetConfig::hidden)
      .def_readwrite("actions", &NetConfig::actions)
      .def_readwrite("rank", &NetConfig::rank)
      .def_readwrite("modules", &NetConfig::modules)
      .def_readwrite("heads", &NetConfig::heads);

  py::class_<Model>(m, "Model")
      .def(py::init<const NetConfig&, uint64_t>(), py::arg("config") = NetConfig{},
           py::arg("seed") = 0)
      .def_static("load",
                  [](const std::string& prefix) {
                    LoadedCheckpoint ck = load_checkpoint(prefix);
                    return Model(std::move(ck.model));
                  })
      .def("logits", &Model::logits, py::arg("states"), py::arg("style") = py::none())
      .def_property_readonly("config", [](const Model& m_) { return m_.inner.net_cfg; });

  m.def("load_style_vectors", [](const std::string& prefix) {
    std::vector<std::pair<int, py::array_t<float>>> out;
    for (const auto& v : load_style_vectors(prefix)) {
      out.push_back({v.player_id, array_from_tensor(v.logits)});
    }
    return out;
  });
}
