#include <string>
#include <vector>

#include "emea/pipeline.hpp"

int main(int argc, char** argv) {
    return emea::dispatch(std::vector<std::string>(argv + 1, argv + argc));
}
