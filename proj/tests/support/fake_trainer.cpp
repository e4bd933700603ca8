// Stand-in trainer for protocol tests. The first argument picks how it
// misbehaves:
//   ok        accuracy 0.5 + 0.01 * cumulative_epochs, first two keys updated
//   count     accuracy = requests seen by this process / 100
//   error     replies with an error message
//   garbage   replies with a line that is not JSON
//   range     accuracy 1.5
//   wrong-id  answers for another candidate
//   silent    never answers
//   exit      exits without answering

#include <chrono>
#include <iostream>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

using nlohmann::json;

int main(int argc, char** argv)
{
    const std::string mode = argc > 1 ? argv[1] : "ok";
    std::string line;
    int seen = 0;
    while (std::getline(std::cin, line)) {
        ++seen;
        const auto req = json::parse(line);
        const auto id = req.at("candidate_id").get<std::uint64_t>();
        if (mode == "exit") {
            return 0;
        }
        if (mode == "silent") {
            std::this_thread::sleep_for(std::chrono::seconds(30));
            return 0;
        }
        json reply{{"type", "eval_result"}, {"candidate_id", id}};
        if (mode == "ok") {
            reply["accuracy"] = 0.5 + 0.01 * req.at("cumulative_epochs").get<int>();
            json keys = json::array();
            const auto& wk = req.at("weight_keys");
            for (std::size_t i = 0; i < wk.size() && i < 2; ++i) {
                keys.push_back({{"key", wk[i]}, {"fitness", reply["accuracy"]}});
            }
            reply["updated_keys"] = keys;
        } else if (mode == "count") {
            reply["accuracy"] = seen / 100.0;
        } else if (mode == "error") {
            reply = {{"type", "error"}, {"candidate_id", id}, {"message", "out of memory"}};
        } else if (mode == "garbage") {
            std::cout << "this is not json" << std::endl;
            continue;
        } else if (mode == "range") {
            reply["accuracy"] = 1.5;
        } else if (mode == "wrong-id") {
            reply["candidate_id"] = id + 1;
            reply["accuracy"] = 0.5;
        }
        std::cout << reply.dump() << std::endl;
    }
    return 0;
}
