# Инициализационный файл для тестов
