#include <iostream>

int main() {
    std::cout << "poac: command suite lands with the pipeline module\n";
    return 0;
}
