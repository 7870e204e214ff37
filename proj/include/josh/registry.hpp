#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "josh/canonical.hpp"

namespace josh {

struct ApiParameter {
    std::string name;
    std::string description;
    std::vector<std::string> allowed;  // empty: free-form
};

enum class Intent { Search, Book };

struct ApiSpec {
    std::string name;
    std::string description;
    std::string domain;
    Intent intent = Intent::Search;
    std::vector<ApiParameter> parameters;

    [[nodiscard]] bool has_parameter(std::string_view p) const {
        for (const auto& param : parameters)
            if (param.name == p) return true;
        return false;
    }
};

class RegistryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The API catalogue mirrored in data/toolwoz_apis.json.
inline constexpr std::string_view kToolWozApisJson = R"JSON([
  {
    "type": "function",
    "function": {
      "name": "search_restaurant",
      "description": "Allows you to search a restaurant",
      "parameters": {
        "type": "object",
        "required": [],
        "properties": {
          "food": {
            "type": "string",
            "description": "Type of food served at the restaurant e.g. modern european"
          },
          "pricerange": {
            "type": "string",
            "description": "Price range the restaurant is in e.g. cheap",
            "enum": [
              "cheap",
              "expensive",
              "moderate"
            ]
          },
          "name": {
            "type": "string",
            "description": "Name of the restaurant e.g. jinling noodle bar"
          },
          "area": {
            "type": "string",
            "description": "Area the restaurant is located in e.g. centre"
          }
        }
      }
    }
  },
  {
    "type": "function",
    "function": {
      "name": "book_restaurant",
      "description": "Allows you to book a restaurant",
      "parameters": {
        "type": "object",
        "required": [],
        "properties": {
          "time": {
            "type": "string",
            "description": "Time the restaurant reservation is at e.g. 13:00"
          },
          "day": {
            "type": "string",
            "description": "Day of the week the restaurant reservation is on e.g. thursday"
          },
          "people": {
            "type": "string",
            "description": "Number of people in the restaurant reservation e.g. 3"
          },
          "name": {
            "type": "string",
            "description": "Name of the restaurant e.g. the river bar steakhouse and grill"
          }
        }
      }
    }
  },
  {
    "type": "function",
    "function": {
      "name": "search_hotel",
      "description": "Allows you to search a hotel",
      "parameters": {
        "type": "object",
        "required": [],
        "properties": {
          "name": {
            "type": "string",
            "description": "The name of the hotel e.g. hamilton lodge"
          },
          "area": {
            "type": "string",
            "description": "The area the hotel is located in e.g. north",
            "enum": [
              "west",
              "east",
              "centre",
              "south",
              "north"
            ]
          },
          "parking": {
            "type": "string",
            "description": "Whether the hotel offers free parking e.g. yes",
            "enum": [
              "yes",
              "no"
            ]
          },
          "pricerange": {
            "type": "string",
            "description": "What the price range of how expensive the hotel is e.g. moderate",
            "enum": [
              "moderate",
              "expensive",
              "cheap"
            ]
          },
          "stars": {
            "type": "string",
            "description": "The number of stars the hotel has e.g. 4",
            "enum": [
              "0",
              "1",
              "2",
              "3",
              "4"
            ]
          },
          "internet": {
            "type": "string",
            "description": "Whether or not the hotel has free internet e.g. yes",
            "enum": [
              "yes",
              "no"
            ]
          },
          "type": {
            "type": "string",
            "description": "Whether to reserve a hotel or guesthouse. e.g. guesthouse",
            "enum": [
              "hotel",
              "guesthouse"
            ]
          }
        }
      }
    }
  },
  {
    "type": "function",
    "function": {
      "name": "book_hotel",
      "description": "Allows you to book a hotel",
      "parameters": {
        "type": "object",
        "required": [],
        "properties": {
          "stay": {
            "type": "string",
            "description": "Number of nights to stay at the hotel e.g. 3"
          },
          "day": {
            "type": "string",
            "description": "Day of the week the hotel stay starts on e.g. friday"
          },
          "people": {
            "type": "string",
            "description": "Number of people in the hotel reservation e.g. 2"
          },
          "name": {
            "type": "string",
            "description": "The name of the hotel e.g. hamilton lodge"
          }
        }
      }
    }
  },
  {
    "type": "function",
    "function": {
      "name": "search_train",
      "description": "Allows you to search a train",
      "parameters": {
        "type": "object",
        "required": [],
        "properties": {
          "leaveAt": {
            "type": "string",
            "description": "Time the train will leave from the departure area e.g. 08:45"
          },
          "destination": {
            "type": "string",
            "description": "Destination area of the train e.g. cambridge"
          },
          "day": {
            "type": "string",
            "description": "Day of the week the train will run e.g. tuesday"
          },
          "arriveBy": {
            "type": "string",
            "description": "Time the train will arrive at the destination e.g. 12:30"
          },
          "departure": {
            "type": "string",
            "description": "Departure area of the train e.g. london liverpool street"
          }
        }
      }
    }
  },
  {
    "type": "function",
    "function": {
      "name": "book_train",
      "description": "Allows you to book a train",
      "parameters": {
        "type": "object",
        "required": [],
        "properties": {
          "people": {
            "type": "string",
            "description": "The number of people or seats to book on the train e.g. 3"
          },
          "trainID": {
            "type": "string",
            "description": "ID for the train the tickets are for e.g. TR2048"
          }
        }
      }
    }
  },
  {
    "type": "function",
    "function": {
      "name": "search_attraction",
      "description": "Allows you to search an attraction",
      "parameters": {
        "type": "object",
        "required": [],
        "properties": {
          "type": {
            "type": "string",
            "description": "The type or theme of the attraction e.g. boat"
          },
          "name": {
            "type": "string",
            "description": "The name of the attraction e.g. sheep's green and lammas land park fen causeway"
          },
          "area": {
            "type": "string",
            "description": "The area where the attraction is e.g. centre",
            "enum": [
              "west",
              "east",
              "centre",
              "south",
              "north"
            ]
          }
        }
      }
    }
  }
])JSON";

inline const std::vector<std::string>& database_domains() {
    static const std::vector<std::string> domains{"restaurant", "hotel", "train", "attraction"};
    return domains;
}

/// Field that identifies an entity for booking purposes.
inline std::string unique_id_field(std::string_view domain) {
    return domain == "train" ? "trainID" : "name";
}

class ApiRegistry {
public:
    ApiRegistry() = default;

    /// Parses an OpenAI-style tool list: [{"type": "function", "function": {...}}].
    static ApiRegistry from_json(const json& tools) {
        if (!tools.is_array()) throw RegistryError("api registry must be a JSON array");
        ApiRegistry reg;
        reg.tools_ = tools;
        for (const auto& entry : tools) {
            const auto& fn = entry.contains("function") ? entry.at("function") : entry;
            ApiSpec spec;
            spec.name = fn.at("name").get<std::string>();
            spec.description = fn.value("description", "");
            auto underscore = spec.name.find('_');
            if (underscore == std::string::npos)
                throw RegistryError("api name must be <intent>_<domain>: " + spec.name);
            auto intent = spec.name.substr(0, underscore);
            spec.domain = spec.name.substr(underscore + 1);
            if (intent == "search")
                spec.intent = Intent::Search;
            else if (intent == "book")
                spec.intent = Intent::Book;
            else
                throw RegistryError("unknown intent in api name: " + spec.name);
            const auto& props = fn.at("parameters").at("properties");
            for (auto it = props.begin(); it != props.end(); ++it) {
                ApiParameter p;
                p.name = it.key();
                p.description = it.value().value("description", "");
                if (it.value().contains("enum"))
                    p.allowed = it.value().at("enum").get<std::vector<std::string>>();
                spec.parameters.push_back(std::move(p));
            }
            if (reg.index_.count(spec.name))
                throw RegistryError("duplicate api: " + spec.name);
            reg.index_.emplace(spec.name, reg.specs_.size());
            reg.specs_.push_back(std::move(spec));
        }
        return reg;
    }

    static ApiRegistry from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw RegistryError("cannot open api registry: " + path);
        return from_json(json::parse(in));
    }

    /// The seven ToolWOZ APIs.
    static const ApiRegistry& standard() {
        static const ApiRegistry reg = from_json(json::parse(kToolWozApisJson));
        return reg;
    }

    [[nodiscard]] const ApiSpec* find(std::string_view name) const {
        auto it = index_.find(std::string(name));
        return it == index_.end() ? nullptr : &specs_[it->second];
    }

    [[nodiscard]] const ApiSpec* find(std::string_view domain, Intent intent) const {
        for (const auto& s : specs_)
            if (s.domain == domain && s.intent == intent) return &s;
        return nullptr;
    }

    [[nodiscard]] const std::vector<ApiSpec>& specs() const { return specs_; }

    /// Tool schemas in chat-completions "tools" format.
    [[nodiscard]] const json& tools_json() const { return tools_; }

private:
    std::vector<ApiSpec> specs_;
    std::map<std::string, std::size_t> index_;
    json tools_ = json::array();
};

}  // namespace josh
