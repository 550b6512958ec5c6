# Инициализационный файл для модуля utils